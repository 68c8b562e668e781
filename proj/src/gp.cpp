#include "gpal/gp.hpp"

#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace gpal::gp {

namespace {

std::string format_lengthscales(const kernels::Spec& spec) {
  std::ostringstream out;
  out << "[";
  for (Eigen::Index j = 0; j < spec.lengthscales.size(); ++j) {
    if (j > 0) out << ", ";
    out << spec.lengthscales[j];
  }
  out << "]";
  return out.str();
}

void check_dimension(const Posterior& model, Eigen::Index d, const char* what) {
  if (d != model.obs.dimension()) {
    throw std::invalid_argument(std::string(what) + ": dimension mismatch");
  }
}

}  // namespace

void Observations::append(const Eigen::VectorXd& x, double value) {
  if (X.rows() == 0) {
    X.resize(0, x.size());
  } else if (x.size() != X.cols()) {
    throw std::invalid_argument("Observations::append: dimension mismatch");
  }
  X.conservativeResize(X.rows() + 1, Eigen::NoChange);
  X.row(X.rows() - 1) = x.transpose();
  y.conservativeResize(y.size() + 1);
  y[y.size() - 1] = value;
}

void Observations::validate() const {
  if (X.rows() != y.size()) {
    throw std::invalid_argument("Observations: |X| != |y|");
  }
  if (X.rows() == 0) {
    throw std::invalid_argument("Observations: empty");
  }
  if (!X.allFinite() || !y.allFinite()) {
    throw std::invalid_argument("Observations: non-finite entries");
  }
  if (X.minCoeff() < 0.0 || X.maxCoeff() > 1.0) {
    throw std::invalid_argument("Observations: coordinates must lie in [0, 1]");
  }
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    for (Eigen::Index j = 0; j < i; ++j) {
      if (X.row(i) == X.row(j)) {
        throw std::invalid_argument("Observations: duplicate points at rows " +
                                    std::to_string(j) + " and " + std::to_string(i));
      }
    }
  }
}

Factorization factor_gram(const Eigen::MatrixXd& gram, double nugget, double max_nugget,
                          const kernels::Spec& spec) {
  if (nugget < 0.0 || !std::isfinite(nugget)) {
    throw std::invalid_argument("factor_gram: nugget must be nonnegative");
  }
  double eta = nugget;
  while (true) {
    Eigen::MatrixXd shifted = gram;
    shifted.diagonal().array() += eta;
    Eigen::LLT<Eigen::MatrixXd> llt(shifted);
    if (llt.info() == Eigen::Success) {
      return Factorization{llt.matrixL(), eta};
    }
    const double next = (eta == 0.0) ? kDefaultNugget : eta * 10.0;
    if (next > max_nugget) {
      throw std::runtime_error("ill-conditioned Gram matrix at nugget " + std::to_string(eta) +
                               " for length scales " + format_lengthscales(spec));
    }
    eta = next;
  }
}

Posterior fit(Observations obs, kernels::Spec kernel, double nugget, double max_nugget) {
  obs.validate();
  kernel.validate();
  if (obs.dimension() != kernel.dimension()) {
    throw std::invalid_argument("fit: observation dimension does not match kernel");
  }
  const Eigen::MatrixXd gram = kernels::gram_matrix(kernel, obs.X);
  Factorization f = factor_gram(gram, nugget, max_nugget, kernel);
  Eigen::VectorXd w = f.chol.triangularView<Eigen::Lower>().solve(obs.y);
  f.chol.triangularView<Eigen::Lower>().transpose().solveInPlace(w);
  Posterior model;
  model.obs = std::move(obs);
  model.kernel = std::move(kernel);
  model.nugget = f.nugget;
  model.chol = std::move(f.chol);
  model.weights = std::move(w);
  return model;
}

double posterior_mean(const Posterior& model, const Eigen::VectorXd& u) {
  check_dimension(model, u.size(), "posterior_mean");
  return kernels::cross_vector(model.kernel, model.obs.X, u).dot(model.weights);
}

double posterior_variance(const Posterior& model, const Eigen::VectorXd& u) {
  check_dimension(model, u.size(), "posterior_variance");
  const Eigen::VectorXd k = kernels::cross_vector(model.kernel, model.obs.X, u);
  const Eigen::VectorXd v = model.chol.triangularView<Eigen::Lower>().solve(k);
  const double var = 1.0 - v.squaredNorm();
  return std::min(1.0, std::max(0.0, var));
}

namespace {

// Shared chunked walk over the rows of U. fn(scaled_block, row_offset) is
// called with the kernel values for each chunk already filled in.
template <typename Fn>
void for_each_cross_chunk(const Posterior& model, const Eigen::MatrixXd& U,
                          Eigen::Index chunk, Fn&& fn) {
  if (U.cols() != model.obs.dimension()) {
    throw std::invalid_argument("batch evaluation: dimension mismatch");
  }
  if (!U.allFinite()) {
    throw std::invalid_argument("batch evaluation: non-finite coordinates");
  }
  if (chunk < 1) chunk = 1;
  const Eigen::Index t = model.obs.count();
  const Eigen::Index m = U.rows();
  const Eigen::VectorXd inv_l = model.kernel.lengthscales.cwiseInverse();
  const Eigen::MatrixXd A = model.obs.X * inv_l.asDiagonal();
  Eigen::MatrixXd block(t, std::min(chunk, std::max<Eigen::Index>(m, 1)));
  for (Eigen::Index start = 0; start < m; start += chunk) {
    const Eigen::Index c = std::min(chunk, m - start);
    const Eigen::MatrixXd B = U.middleRows(start, c) * inv_l.asDiagonal();
    auto out = block.leftCols(c);
    kernels::detail::cross_block_scaled(model.kernel.family, A, B, out);
    fn(out, start);
  }
}

}  // namespace

Eigen::VectorXd posterior_mean_batch(const Posterior& model, const Eigen::MatrixXd& U,
                                     Eigen::Index chunk) {
  Eigen::VectorXd out(U.rows());
  for_each_cross_chunk(model, U, chunk, [&](Eigen::Ref<Eigen::MatrixXd> blk, Eigen::Index start) {
    out.segment(start, blk.cols()) = blk.transpose() * model.weights;
  });
  return out;
}

Eigen::VectorXd posterior_variance_batch(const Posterior& model, const Eigen::MatrixXd& U,
                                         Eigen::Index chunk) {
  Eigen::VectorXd out(U.rows());
  for_each_cross_chunk(model, U, chunk, [&](Eigen::Ref<Eigen::MatrixXd> blk, Eigen::Index start) {
    model.chol.triangularView<Eigen::Lower>().solveInPlace(blk);
    for (Eigen::Index j = 0; j < blk.cols(); ++j) {
      const double var = 1.0 - blk.col(j).squaredNorm();
      out[start + j] = std::min(1.0, std::max(0.0, var));
    }
  });
  return out;
}

double log_marginal_likelihood(const Observations& obs, const kernels::Spec& kernel,
                               double nugget, double max_nugget) {
  obs.validate();
  kernel.validate();
  const Eigen::MatrixXd gram = kernels::gram_matrix(kernel, obs.X);
  const Factorization f = factor_gram(gram, nugget, max_nugget, kernel);
  const Eigen::VectorXd v = f.chol.triangularView<Eigen::Lower>().solve(obs.y);
  const double t = static_cast<double>(obs.count());
  return -0.5 * v.squaredNorm() - f.chol.diagonal().array().log().sum() -
         0.5 * t * std::log(2.0 * std::numbers::pi);
}

double log_marginal_likelihood(const Posterior& model) {
  const Eigen::VectorXd v =
      model.chol.triangularView<Eigen::Lower>().solve(model.obs.y);
  const double t = static_cast<double>(model.obs.count());
  return -0.5 * v.squaredNorm() - model.chol.diagonal().array().log().sum() -
         0.5 * t * std::log(2.0 * std::numbers::pi);
}

LmlWithGradient log_marginal_likelihood_gradient(const Observations& obs,
                                                 const kernels::Spec& kernel,
                                                 double nugget, double max_nugget) {
  obs.validate();
  kernel.validate();
  const Eigen::Index t = obs.count();
  const Eigen::Index d = kernel.dimension();
  const Eigen::MatrixXd gram = kernels::gram_matrix(kernel, obs.X);
  const Factorization f = factor_gram(gram, nugget, max_nugget, kernel);
  const auto lower = f.chol.triangularView<Eigen::Lower>();

  Eigen::VectorXd v = lower.solve(obs.y);
  LmlWithGradient result;
  result.value = -0.5 * v.squaredNorm() - f.chol.diagonal().array().log().sum() -
                 0.5 * static_cast<double>(t) * std::log(2.0 * std::numbers::pi);

  Eigen::VectorXd alpha = v;
  lower.transpose().solveInPlace(alpha);  // alpha = (K + eta I)^{-1} y
  Eigen::MatrixXd kinv = Eigen::MatrixXd::Identity(t, t);
  lower.solveInPlace(kinv);
  lower.transpose().solveInPlace(kinv);

  // d LML / d theta_j = 1/2 tr((alpha alpha' - K^{-1}) dK/dtheta_j)
  const Eigen::MatrixXd inner = alpha * alpha.transpose() - kinv;
  const std::vector<Eigen::MatrixXd> grads = kernels::gram_gradient(kernel, obs.X);
  result.gradient.resize(d);
  for (Eigen::Index j = 0; j < d; ++j) {
    result.gradient[j] = 0.5 * inner.cwiseProduct(grads[static_cast<std::size_t>(j)]).sum();
  }
  return result;
}

}  // namespace gpal::gp
