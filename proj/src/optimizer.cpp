#include "gpal/optimizer.hpp"

#include <cmath>
#include <deque>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "gpal/rng.hpp"

namespace gpal::gp {

namespace {

struct Objective {
  const Observations& obs;
  kernels::Family family;
  const OptimizerConfig& config;

  // Negated LML and gradient at log length scales `x`. Throws on
  // factorization failure; the caller treats that as an infeasible point.
  double value_and_gradient(const Eigen::VectorXd& x, Eigen::VectorXd& grad) const {
    kernels::Spec spec{family, x.array().exp().matrix()};
    const LmlWithGradient lml =
        log_marginal_likelihood_gradient(obs, spec, config.nugget, config.max_nugget);
    grad = -lml.gradient;
    return -lml.value;
  }
};

Eigen::VectorXd project(const Eigen::VectorXd& x, double lo, double hi) {
  return x.cwiseMax(lo).cwiseMin(hi);
}

struct LocalResult {
  Eigen::VectorXd x;
  double f = std::numeric_limits<double>::infinity();
};

// Projected L-BFGS descent on f from x0 inside [lo, hi]^d. Returns the best
// iterate; assumes f(x0) is evaluable (the caller catches initial failures).
LocalResult minimize(const Objective& objective, Eigen::VectorXd x0, double lo, double hi,
                     int max_iterations, double tolerance) {
  constexpr int kMemory = 8;
  constexpr double kArmijo = 1e-4;
  const Eigen::Index d = x0.size();

  Eigen::VectorXd x = project(x0, lo, hi);
  Eigen::VectorXd grad(d);
  double f = objective.value_and_gradient(x, grad);

  std::deque<std::pair<Eigen::VectorXd, Eigen::VectorXd>> memory;  // (s, y) pairs
  for (int iter = 0; iter < max_iterations; ++iter) {
    const Eigen::VectorXd projected_step = project(x - grad, lo, hi) - x;
    if (projected_step.lpNorm<Eigen::Infinity>() < tolerance) break;

    // Two-loop recursion over stored curvature pairs.
    Eigen::VectorXd direction = -grad;
    std::vector<double> alphas(memory.size());
    for (std::size_t i = memory.size(); i-- > 0;) {
      const auto& [s, yv] = memory[i];
      const double rho = 1.0 / yv.dot(s);
      alphas[i] = rho * s.dot(direction);
      direction -= alphas[i] * yv;
    }
    if (!memory.empty()) {
      const auto& [s, yv] = memory.back();
      direction *= s.dot(yv) / yv.squaredNorm();
    }
    for (std::size_t i = 0; i < memory.size(); ++i) {
      const auto& [s, yv] = memory[i];
      const double rho = 1.0 / yv.dot(s);
      const double beta = rho * yv.dot(direction);
      direction += (alphas[i] - beta) * s;
    }
    if (direction.dot(grad) >= 0.0) direction = -grad;

    // Backtracking Armijo search along the projection arc.
    double step = 1.0;
    bool accepted = false;
    Eigen::VectorXd x_new(d), grad_new(d);
    double f_new = 0.0;
    for (int ls = 0; ls < 40; ++ls) {
      x_new = project(x + step * direction, lo, hi);
      if ((x_new - x).lpNorm<Eigen::Infinity>() == 0.0) break;
      bool evaluated = true;
      try {
        f_new = objective.value_and_gradient(x_new, grad_new);
      } catch (const std::runtime_error&) {
        evaluated = false;  // infeasible point, shrink the step
      }
      if (evaluated && std::isfinite(f_new) &&
          f_new <= f + kArmijo * grad.dot(x_new - x)) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;

    const Eigen::VectorXd s = x_new - x;
    const Eigen::VectorXd yv = grad_new - grad;
    if (s.dot(yv) > 1e-12) {
      memory.emplace_back(s, yv);
      if (memory.size() > static_cast<std::size_t>(kMemory)) memory.pop_front();
    }
    x = std::move(x_new);
    f = f_new;
    grad = std::move(grad_new);
  }
  return LocalResult{x, f};
}

}  // namespace

void OptimizerConfig::validate() const {
  if (!(lower_bound > 0.0) || !(upper_bound > lower_bound)) {
    throw std::invalid_argument("OptimizerConfig: need 0 < lower_bound < upper_bound");
  }
  if (restarts < 1) throw std::invalid_argument("OptimizerConfig: restarts must be >= 1");
  if (max_iterations < 1) throw std::invalid_argument("OptimizerConfig: max_iterations must be >= 1");
  if (!(gradient_tolerance > 0.0)) {
    throw std::invalid_argument("OptimizerConfig: gradient_tolerance must be positive");
  }
}

OptimizeResult optimize_lengthscales(const Observations& obs, kernels::Family family,
                                     const OptimizerConfig& config,
                                     const std::optional<Eigen::VectorXd>& incumbent) {
  config.validate();
  obs.validate();
  if (obs.count() < 2) {
    throw std::invalid_argument("optimize_lengthscales: needs at least 2 observations");
  }
  const Eigen::Index d = obs.dimension();
  const double lo = std::log(config.lower_bound);
  const double hi = std::log(config.upper_bound);
  const Objective objective{obs, family, config};

  Eigen::VectorXd start0 = Eigen::VectorXd::Zero(d);
  if (incumbent) {
    if (incumbent->size() != d) {
      throw std::invalid_argument("optimize_lengthscales: incumbent dimension mismatch");
    }
    start0 = incumbent->array().log().matrix();
  }
  start0 = project(start0, lo, hi);

  rng::Engine engine(config.seed);
  OptimizeResult best;
  bool found = false;
  for (int restart = 0; restart < config.restarts; ++restart) {
    Eigen::VectorXd x0(d);
    if (restart == 0) {
      x0 = start0;
    } else {
      for (Eigen::Index j = 0; j < d; ++j) {
        x0[j] = lo + (hi - lo) * rng::uniform01(engine);
      }
    }
    LocalResult local;
    try {
      local = minimize(objective, x0, lo, hi, config.max_iterations, config.gradient_tolerance);
    } catch (const std::runtime_error& err) {
      std::ostringstream note;
      note << "restart " << restart << " at log lengthscales [" << x0.transpose()
           << "]: " << err.what();
      best.failed_restarts.push_back(note.str());
      continue;
    }
    const double lml = -local.f;
    if (!found || lml > best.lml) {
      // exp(log(bound)) can land one ulp outside the box; clamp in linear space.
      Eigen::VectorXd lengthscales = local.x.array().exp().matrix();
      lengthscales = lengthscales.cwiseMax(config.lower_bound).cwiseMin(config.upper_bound);
      best.kernel = kernels::Spec{family, std::move(lengthscales)};
      best.lml = lml;
      best.best_restart = restart;
      found = true;
    }
  }
  if (!found) {
    std::ostringstream message;
    message << "optimize_lengthscales: every restart failed to factorize;";
    for (const auto& note : best.failed_restarts) message << "\n  " << note;
    throw std::runtime_error(message.str());
  }
  return best;
}

}  // namespace gpal::gp
