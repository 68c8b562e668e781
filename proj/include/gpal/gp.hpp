#pragma once

#include <Eigen/Dense>

#include "gpal/kernels.hpp"

namespace gpal::gp {

inline constexpr double kDefaultNugget = 1e-10;
inline constexpr double kMaxNugget = 1e-6;

// Training data. Points live in the unit cube and must be pairwise distinct.
struct Observations {
  Eigen::MatrixXd X;  // one point per row
  Eigen::VectorXd y;

  Eigen::Index count() const { return X.rows(); }
  Eigen::Index dimension() const { return X.cols(); }
  void append(const Eigen::VectorXd& x, double value);
  void validate() const;
};

// Fitted GP state, immutable after fit().
//   chol * chol^T = K + nugget * I (lower triangular factor)
//   weights = (K + nugget * I)^{-1} y
struct Posterior {
  Observations obs;
  kernels::Spec kernel;
  double nugget = 0.0;  // value actually added to the Gram diagonal
  Eigen::MatrixXd chol;
  Eigen::VectorXd weights;
};

struct Factorization {
  Eigen::MatrixXd chol;
  double nugget = 0.0;
};

/// Lower Cholesky factor of gram + eta * I. Starts at eta = nugget and
/// escalates x10 up to max_nugget when factorization fails; throws an
/// "ill-conditioned Gram matrix" error (naming the length scales) beyond that.
Factorization factor_gram(const Eigen::MatrixXd& gram, double nugget, double max_nugget,
                          const kernels::Spec& spec);

Posterior fit(Observations obs, kernels::Spec kernel, double nugget = kDefaultNugget,
              double max_nugget = kMaxNugget);

/// mu(u) = k_t(u)' weights.
double posterior_mean(const Posterior& model, const Eigen::VectorXd& u);

/// sigma^2(u) = k(u,u) - k_t(u)' (K + eta I)^{-1} k_t(u), clamped to [0, 1].
double posterior_variance(const Posterior& model, const Eigen::VectorXd& u);

/// Row-wise posterior mean over U. Chunked internally; deterministic for a
/// fixed chunk size, and within 1e-12 of the pointwise call elementwise.
Eigen::VectorXd posterior_mean_batch(const Posterior& model, const Eigen::MatrixXd& U,
                                     Eigen::Index chunk = 4096);

/// Row-wise posterior variance over U, same contract as posterior_mean_batch.
Eigen::VectorXd posterior_variance_batch(const Posterior& model, const Eigen::MatrixXd& U,
                                         Eigen::Index chunk = 4096);

/// -1/2 y' (K+eta I)^{-1} y - 1/2 log|K+eta I| - t/2 log(2 pi), via Cholesky.
double log_marginal_likelihood(const Observations& obs, const kernels::Spec& kernel,
                               double nugget = kDefaultNugget, double max_nugget = kMaxNugget);

/// Same quantity evaluated from an already-fitted model's factor.
double log_marginal_likelihood(const Posterior& model);

struct LmlWithGradient {
  double value = 0.0;
  Eigen::VectorXd gradient;  // with respect to log length scales
};

LmlWithGradient log_marginal_likelihood_gradient(const Observations& obs,
                                                 const kernels::Spec& kernel,
                                                 double nugget = kDefaultNugget,
                                                 double max_nugget = kMaxNugget);

}  // namespace gpal::gp
