#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "gpal/gp.hpp"
#include "gpal/kernels.hpp"
#include "gpal/metrics.hpp"
#include "gpal/optimizer.hpp"
#include "gpal/sampling.hpp"
#include "gpal/stopping.hpp"
#include "gpal/trace.hpp"

namespace gpal::loop {

enum class Normalization { None, Standardize, MinMax };
Normalization normalization_from_name(const std::string& name);
std::string normalization_name(Normalization policy);

// Sequential max-variance exploration settings.
struct LoopConfig {
  kernels::Family family = kernels::Family::SquaredExponential;
  long t1 = 3;       // initial design size, drawn uniformly from the grid
  long budget = 40;  // hard cap on total oracle calls (includes the t1 points)
  std::optional<stopping::Criterion> criterion;  // live rule; absent = run to budget
  std::uint64_t seed = 0;
  gp::OptimizerConfig optimizer;
  Normalization normalization = Normalization::Standardize;
  long refit_every = 1;  // re-estimate length scales every k-th iteration
  std::optional<Eigen::VectorXd> fixed_lengthscales;  // disables estimation
  bool record_timing = false;
  long snapshot_every = 1;  // metric-snapshot cadence (when ground truth given)

  void validate(long grid_size, long grid_dimension) const;
};

// Fitted model plus the affine map back to the raw oracle scale.
struct Surrogate {
  gp::Posterior posterior;  // fitted on normalized values
  double y_offset = 0.0;
  double y_scale = 1.0;

  double predict(const Eigen::VectorXd& u) const;
  Eigen::VectorXd predict_batch(const Eigen::MatrixXd& U) const;
  /// Posterior variance on the normalized scale (prior variance 1).
  double variance(const Eigen::VectorXd& u) const;
  Eigen::VectorXd variance_batch(const Eigen::MatrixXd& U) const;
};

using Oracle = std::function<double(const Eigen::VectorXd&)>;

struct RunResult {
  std::optional<Surrogate> surrogate;  // absent when aborted before the first fit
  trace::RunTrace trace;
};

/// Unvisited grid index of maximal posterior variance; ties resolved to the
/// lowest index. Errors when every grid point has been visited.
long select_next(const gp::Posterior& model, const sampling::CandidateGrid& grid,
                 const std::vector<char>& visited);

/// Max-variance active learning. Per iteration, once the initial design is
/// in: estimate length scales, fit, compute the grid variance field, record
/// its maximum, test the stopping rule, then query the oracle at the
/// unvisited argmax. Oracle failures abort the run but preserve the trace.
RunResult run(const Oracle& oracle, const sampling::CandidateGrid& grid, const LoopConfig& config,
              const metrics::GroundTruth* ground_truth = nullptr);

}  // namespace gpal::loop
