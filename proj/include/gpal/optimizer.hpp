#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gpal/gp.hpp"

namespace gpal::gp {

struct OptimizerConfig {
  double lower_bound = 1e-2;  // box bounds on every length scale
  double upper_bound = 1e2;
  int restarts = 5;  // restart 0 is the incumbent (or all-ones fallback)
  int max_iterations = 200;
  double gradient_tolerance = 1e-5;
  std::uint64_t seed = 0;
  double nugget = kDefaultNugget;
  double max_nugget = kMaxNugget;

  void validate() const;
};

struct OptimizeResult {
  kernels::Spec kernel;
  double lml = 0.0;
  int best_restart = -1;
  std::vector<std::string> failed_restarts;  // one note per failed initialization
};

/// Maximizes the log marginal likelihood over length scales in
/// [lower_bound, upper_bound]^d by projected quasi-Newton ascent in log space,
/// multi-started from the incumbent (restart 0) and log-uniform random draws.
/// Deterministic given (obs, family, config, incumbent). Throws when every
/// restart fails to factorize, listing the attempted initializations.
OptimizeResult optimize_lengthscales(const Observations& obs, kernels::Family family,
                                     const OptimizerConfig& config,
                                     const std::optional<Eigen::VectorXd>& incumbent = std::nullopt);

}  // namespace gpal::gp
