#pragma once

#include <Eigen/Dense>

#include "gpal/rng.hpp"

namespace gpal::test {

// n x d matrix of uniform draws in [lo, hi).
inline Eigen::MatrixXd random_points(long n, long d, rng::Engine& engine, double lo = 0.0,
                                     double hi = 1.0) {
  Eigen::MatrixXd X(n, d);
  for (long i = 0; i < n; ++i) {
    for (long j = 0; j < d; ++j) {
      X(i, j) = lo + (hi - lo) * rng::uniform01(engine);
    }
  }
  return X;
}

inline Eigen::VectorXd random_vector(long d, rng::Engine& engine, double lo = 0.0,
                                     double hi = 1.0) {
  Eigen::VectorXd x(d);
  for (long j = 0; j < d; ++j) x[j] = lo + (hi - lo) * rng::uniform01(engine);
  return x;
}

// Standard normal draw (Box-Muller, one value per call).
inline double random_normal(rng::Engine& engine) {
  const double u1 = 1.0 - rng::uniform01(engine);  // in (0, 1]
  const double u2 = rng::uniform01(engine);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
}

}  // namespace gpal::test
