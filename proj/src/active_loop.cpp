#include "gpal/active_loop.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>

#include "gpal/rng.hpp"

namespace gpal::loop {

Normalization normalization_from_name(const std::string& name) {
  if (name == "none") return Normalization::None;
  if (name == "standardize") return Normalization::Standardize;
  if (name == "minmax") return Normalization::MinMax;
  throw std::invalid_argument("normalization: unknown policy '" + name +
                              "'; expected none, standardize, or minmax");
}

std::string normalization_name(Normalization policy) {
  switch (policy) {
    case Normalization::None: return "none";
    case Normalization::Standardize: return "standardize";
    case Normalization::MinMax: return "minmax";
  }
  throw std::logic_error("normalization_name: unknown policy");
}

void LoopConfig::validate(long grid_size, long grid_dimension) const {
  if (t1 < 1) throw std::invalid_argument("LoopConfig: t1 must be >= 1");
  if (budget < t1) throw std::invalid_argument("LoopConfig: budget must be >= t1");
  if (t1 > grid_size) {
    throw std::invalid_argument("LoopConfig: t1 = " + std::to_string(t1) +
                                " exceeds grid size " + std::to_string(grid_size));
  }
  if (refit_every < 1) throw std::invalid_argument("LoopConfig: refit_every must be >= 1");
  if (snapshot_every < 1) throw std::invalid_argument("LoopConfig: snapshot_every must be >= 1");
  optimizer.validate();
  if (criterion) criterion->validate();
  if (fixed_lengthscales) {
    if (fixed_lengthscales->size() != grid_dimension) {
      throw std::invalid_argument("LoopConfig: fixed_lengthscales dimension mismatch");
    }
    kernels::Spec spec{family, *fixed_lengthscales};
    spec.validate();
  }
}

double Surrogate::predict(const Eigen::VectorXd& u) const {
  return y_offset + y_scale * gp::posterior_mean(posterior, u);
}

Eigen::VectorXd Surrogate::predict_batch(const Eigen::MatrixXd& U) const {
  Eigen::VectorXd mu = gp::posterior_mean_batch(posterior, U);
  return (y_scale * mu).array() + y_offset;
}

double Surrogate::variance(const Eigen::VectorXd& u) const {
  return gp::posterior_variance(posterior, u);
}

Eigen::VectorXd Surrogate::variance_batch(const Eigen::MatrixXd& U) const {
  return gp::posterior_variance_batch(posterior, U);
}

namespace {

long argmax_unvisited(const Eigen::VectorXd& variances, const std::vector<char>& visited) {
  long best = -1;
  double best_value = -1.0;
  for (long i = 0; i < variances.size(); ++i) {
    if (visited[static_cast<std::size_t>(i)]) continue;
    if (variances[i] > best_value) {
      best_value = variances[i];
      best = i;
    }
  }
  return best;
}

struct Scaling {
  double offset = 0.0;
  double scale = 1.0;
};

Scaling compute_scaling(Normalization policy, const Eigen::VectorXd& y) {
  Scaling s;
  switch (policy) {
    case Normalization::None:
      return s;
    case Normalization::Standardize: {
      s.offset = y.mean();
      const double var = (y.array() - s.offset).square().sum() / static_cast<double>(y.size());
      const double sd = std::sqrt(var);
      s.scale = sd > 0.0 ? sd : 1.0;
      return s;
    }
    case Normalization::MinMax: {
      s.offset = y.minCoeff();
      const double range = y.maxCoeff() - s.offset;
      s.scale = range > 0.0 ? range : 1.0;
      return s;
    }
  }
  throw std::logic_error("compute_scaling: unknown policy");
}

}  // namespace

long select_next(const gp::Posterior& model, const sampling::CandidateGrid& grid,
                 const std::vector<char>& visited) {
  if (static_cast<long>(visited.size()) != grid.size()) {
    throw std::invalid_argument("select_next: visited mask size mismatch");
  }
  const Eigen::VectorXd variances = gp::posterior_variance_batch(model, grid.points);
  const long index = argmax_unvisited(variances, visited);
  if (index < 0) throw std::runtime_error("select_next: grid exhausted, no unvisited points");
  return index;
}

RunResult run(const Oracle& oracle, const sampling::CandidateGrid& grid, const LoopConfig& config,
              const metrics::GroundTruth* ground_truth) {
  config.validate(grid.size(), grid.dimension());
  if (!oracle) throw std::invalid_argument("run: oracle must be callable");

  RunResult result;
  auto& trace = result.trace;
  trace.header.kernel = kernels::family_name(config.family);
  trace.header.grid = grid.provenance;
  trace.header.grid_size = grid.size();
  trace.header.dimension = grid.dimension();
  trace.header.t1 = config.t1;
  trace.header.budget = config.budget;
  trace.header.seed = config.seed;
  trace.header.normalization = normalization_name(config.normalization);
  if (config.criterion) trace.header.criterion = config.criterion->name();
  trace.header.record_timing = config.record_timing;

  const auto start = std::chrono::steady_clock::now();
  auto elapsed = [&]() {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  };

  std::vector<char> visited(static_cast<std::size_t>(grid.size()), 0);
  gp::Observations obs;
  obs.X.resize(0, grid.dimension());
  obs.y.resize(0);

  auto query = [&](long grid_index) {
    const Eigen::VectorXd point = grid.points.row(grid_index).transpose();
    const double value = oracle(point);
    if (!std::isfinite(value)) {
      throw std::runtime_error("oracle returned non-finite value at grid index " +
                               std::to_string(grid_index));
    }
    visited[static_cast<std::size_t>(grid_index)] = 1;
    obs.append(point, value);
    trace::Record record;
    record.t = static_cast<long>(trace.records.size()) + 1;
    record.grid_index = grid_index;
    record.point = point;
    record.value = value;
    if (config.record_timing) record.wall_time = elapsed();
    trace.records.push_back(std::move(record));
  };

  auto abort_run = [&](const std::string& message) {
    trace.terminal.status = "aborted";
    trace.terminal.stopped_t = static_cast<long>(trace.records.size());
    trace.terminal.message = message;
    return result;
  };

  // Initial design: t1 distinct grid points, uniform without replacement.
  rng::Engine engine(config.seed);
  const auto initial = rng::sample_without_replacement(grid.size(), config.t1, engine);
  for (long index : initial) {
    try {
      query(index);
    } catch (const std::exception& e) {
      return abort_run(e.what());
    }
  }

  stopping::VarianceHistory history;
  history.first_t = config.t1;
  // Warm start at unit length scales; every refit replaces this incumbent.
  kernels::Spec current{config.family,
                        config.fixed_lengthscales
                            ? *config.fixed_lengthscales
                            : Eigen::VectorXd(Eigen::VectorXd::Ones(grid.dimension()))};
  long fits_done = 0;

  while (true) {
    const long t = obs.count();

    // (a) Estimate length scales by maximum likelihood, unless pinned.
    Scaling scaling = compute_scaling(config.normalization, obs.y);
    gp::Observations scaled = obs;
    scaled.y = (obs.y.array() - scaling.offset) / scaling.scale;
    bool refit = false;
    if (!config.fixed_lengthscales && fits_done % config.refit_every == 0) {
      gp::OptimizerConfig opt = config.optimizer;
      opt.seed = rng::derive_seed(config.seed, static_cast<std::uint64_t>(t));
      try {
        const auto fit =
            gp::optimize_lengthscales(scaled, config.family, opt, current.lengthscales);
        current = fit.kernel;
        refit = true;
      } catch (const std::exception& e) {
        return abort_run(std::string("length-scale estimation failed at t=") +
                         std::to_string(t) + ": " + e.what());
      }
    }
    ++fits_done;

    // (b) Fit the posterior at the current length scales.
    gp::Posterior posterior;
    try {
      posterior = gp::fit(scaled, current, config.optimizer.nugget, config.optimizer.max_nugget);
    } catch (const std::exception& e) {
      return abort_run(std::string("posterior fit failed at t=") + std::to_string(t) + ": " +
                       e.what());
    }
    result.surrogate = Surrogate{posterior, scaling.offset, scaling.scale};

    // (c) Variance field over the full grid; (d) record its maximum.
    const Eigen::VectorXd variances = gp::posterior_variance_batch(posterior, grid.points);
    const double v_max = variances.maxCoeff();
    history.append(v_max);

    trace::FitInfo fit_info;
    fit_info.lengthscales = current.lengthscales;
    fit_info.variance = v_max;
    fit_info.lml = gp::log_marginal_likelihood(posterior);
    fit_info.refit = refit;
    if (ground_truth && (t - config.t1) % config.snapshot_every == 0) {
      fit_info.metric_snapshot =
          metrics::all_metrics(*ground_truth, result.surrogate->predict_batch(ground_truth->points));
    }
    trace.records.back().fit = std::move(fit_info);
    if (config.record_timing) trace.records.back().wall_time = elapsed();

    // (e) Stopping rule, then the budget cap.
    if (config.criterion && stopping::should_stop(*config.criterion, history)) {
      trace.terminal.status = "criterion_fired";
      trace.terminal.stopped_t = t;
      trace.terminal.criterion = config.criterion->name();
      break;
    }
    if (t >= config.budget) {
      trace.terminal.status = "completed";
      trace.terminal.stopped_t = t;
      trace.terminal.message = "budget reached";
      break;
    }

    // (f) Query the oracle at the unvisited point of maximal variance.
    const long next = argmax_unvisited(variances, visited);
    if (next < 0) {
      trace.terminal.status = "grid_exhausted";
      trace.terminal.stopped_t = t;
      trace.terminal.message = "budget: grid exhausted";
      break;
    }
    try {
      query(next);
    } catch (const std::exception& e) {
      return abort_run(e.what());
    }
  }

  // Final record always carries a metric snapshot when ground truth is given.
  if (ground_truth && result.surrogate && trace.records.back().fit &&
      trace.records.back().fit->metric_snapshot.empty()) {
    trace.records.back().fit->metric_snapshot =
        metrics::all_metrics(*ground_truth, result.surrogate->predict_batch(ground_truth->points));
  }
  trace.validate();
  return result;
}

}  // namespace gpal::loop
