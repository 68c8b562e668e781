#include "gpal/kernels.hpp"

#include <cmath>
#include <stdexcept>

namespace gpal::kernels {

namespace {

constexpr double kSqrt3 = 1.7320508075688772;
constexpr double kSqrt5 = 2.23606797749979;

void check_dimension(const Spec& spec, Eigen::Index d, const char* what) {
  if (d != spec.dimension()) {
    throw std::invalid_argument(std::string(what) + ": dimension " + std::to_string(d) +
                                " does not match kernel dimension " +
                                std::to_string(spec.dimension()));
  }
}

void check_finite(const Eigen::Ref<const Eigen::MatrixXd>& m, const char* what) {
  if (!m.allFinite()) {
    throw std::invalid_argument(std::string(what) + ": non-finite coordinates");
  }
}

// Same reciprocal-scaling arithmetic as the batch path, so pointwise and
// batched evaluations agree to rounding error.
double scaled_sqdist(const Spec& spec, const Eigen::VectorXd& u, const Eigen::VectorXd& v) {
  double s = 0.0;
  for (Eigen::Index j = 0; j < u.size(); ++j) {
    const double inv = 1.0 / spec.lengthscales[j];
    const double d = u[j] * inv - v[j] * inv;
    s += d * d;
  }
  return s;
}

}  // namespace

Family family_from_name(const std::string& name) {
  if (name == "se" || name == "squared_exponential" || name == "rbf") {
    return Family::SquaredExponential;
  }
  if (name == "matern32" || name == "matern_32") return Family::Matern32;
  if (name == "matern52" || name == "matern_52") return Family::Matern52;
  throw std::invalid_argument("unknown kernel family: " + name);
}

std::string family_name(Family family) {
  switch (family) {
    case Family::SquaredExponential: return "se";
    case Family::Matern32: return "matern32";
    case Family::Matern52: return "matern52";
  }
  throw std::logic_error("unknown kernel family");
}

void Spec::validate() const {
  if (lengthscales.size() < 1) {
    throw std::invalid_argument("KernelSpec: needs at least one length scale");
  }
  for (Eigen::Index j = 0; j < lengthscales.size(); ++j) {
    const double l = lengthscales[j];
    if (!std::isfinite(l) || l <= 0.0) {
      throw std::invalid_argument("KernelSpec: length scales must be positive and finite");
    }
  }
}

double detail::value_from_sqdist(Family family, double sqdist) {
  switch (family) {
    case Family::SquaredExponential:
      return std::exp(-0.5 * sqdist);
    case Family::Matern32: {
      if (sqdist == 0.0) return 1.0;
      const double r = std::sqrt(sqdist);
      return (1.0 + kSqrt3 * r) * std::exp(-kSqrt3 * r);
    }
    case Family::Matern52: {
      if (sqdist == 0.0) return 1.0;
      const double r = std::sqrt(sqdist);
      return (1.0 + kSqrt5 * r + (5.0 / 3.0) * sqdist) * std::exp(-kSqrt5 * r);
    }
  }
  throw std::logic_error("unknown kernel family");
}

double detail::gradient_prefactor(Family family, double sqdist) {
  switch (family) {
    case Family::SquaredExponential:
      return std::exp(-0.5 * sqdist);
    case Family::Matern32:
      return 3.0 * std::exp(-kSqrt3 * std::sqrt(sqdist));
    case Family::Matern52: {
      const double r = std::sqrt(sqdist);
      return (5.0 / 3.0) * (1.0 + kSqrt5 * r) * std::exp(-kSqrt5 * r);
    }
  }
  throw std::logic_error("unknown kernel family");
}

double eval(const Spec& spec, const Eigen::VectorXd& u, const Eigen::VectorXd& v) {
  spec.validate();
  check_dimension(spec, u.size(), "eval(u)");
  check_dimension(spec, v.size(), "eval(v)");
  check_finite(u, "eval(u)");
  check_finite(v, "eval(v)");
  if (u == v) return 1.0;
  return detail::value_from_sqdist(spec.family, scaled_sqdist(spec, u, v));
}

Eigen::MatrixXd gram_matrix(const Spec& spec, const Eigen::MatrixXd& X) {
  spec.validate();
  check_dimension(spec, X.cols(), "gram_matrix");
  check_finite(X, "gram_matrix");
  const Eigen::Index t = X.rows();
  Eigen::MatrixXd A = X * spec.lengthscales.cwiseInverse().asDiagonal();
  Eigen::MatrixXd K(t, t);
  for (Eigen::Index i = 0; i < t; ++i) {
    K(i, i) = 1.0;
    for (Eigen::Index j = 0; j < i; ++j) {
      const double s = (A.row(i) - A.row(j)).squaredNorm();
      const double k = detail::value_from_sqdist(spec.family, s);
      K(i, j) = k;
      K(j, i) = k;
    }
  }
  return K;
}

Eigen::VectorXd cross_vector(const Spec& spec, const Eigen::MatrixXd& X,
                             const Eigen::VectorXd& u) {
  spec.validate();
  check_dimension(spec, X.cols(), "cross_vector(X)");
  check_dimension(spec, u.size(), "cross_vector(u)");
  check_finite(X, "cross_vector(X)");
  check_finite(u, "cross_vector(u)");
  const Eigen::Index t = X.rows();
  Eigen::VectorXd k(t);
  for (Eigen::Index i = 0; i < t; ++i) {
    Eigen::VectorXd xi = X.row(i).transpose();
    k[i] = (xi == u) ? 1.0 : detail::value_from_sqdist(spec.family, scaled_sqdist(spec, xi, u));
  }
  return k;
}

Eigen::MatrixXd cross_matrix(const Spec& spec, const Eigen::MatrixXd& X,
                             const Eigen::MatrixXd& U) {
  spec.validate();
  check_dimension(spec, X.cols(), "cross_matrix(X)");
  check_dimension(spec, U.cols(), "cross_matrix(U)");
  check_finite(X, "cross_matrix(X)");
  check_finite(U, "cross_matrix(U)");
  Eigen::MatrixXd A = X * spec.lengthscales.cwiseInverse().asDiagonal();
  Eigen::MatrixXd B = U * spec.lengthscales.cwiseInverse().asDiagonal();
  Eigen::MatrixXd out(X.rows(), U.rows());
  detail::cross_block_scaled(spec.family, A, B, out);
  return out;
}

void detail::cross_block_scaled(Family family, const Eigen::MatrixXd& A,
                                const Eigen::MatrixXd& B, Eigen::Ref<Eigen::MatrixXd> out) {
  const Eigen::Index c = B.rows();
  const Eigen::Index d = A.cols();
  // Squared distances accumulated per dimension; direct differences avoid the
  // cancellation of the norm-expansion trick.
  for (Eigen::Index j = 0; j < c; ++j) {
    out.col(j).array() = (A.col(0).array() - B(j, 0)).square();
    for (Eigen::Index k = 1; k < d; ++k) {
      out.col(j).array() += (A.col(k).array() - B(j, k)).square();
    }
  }
  switch (family) {
    case Family::SquaredExponential:
      out.array() = (-0.5 * out.array()).exp();
      return;
    case Family::Matern32: {
      Eigen::ArrayXXd r = out.array().sqrt();
      out.array() = (1.0 + kSqrt3 * r) * (-kSqrt3 * r).exp();
      return;
    }
    case Family::Matern52: {
      Eigen::ArrayXXd r = out.array().sqrt();
      out.array() = (1.0 + kSqrt5 * r + (5.0 / 3.0) * out.array()) * (-kSqrt5 * r).exp();
      return;
    }
  }
  throw std::logic_error("unknown kernel family");
}

std::vector<Eigen::MatrixXd> gram_gradient(const Spec& spec, const Eigen::MatrixXd& X) {
  spec.validate();
  check_dimension(spec, X.cols(), "gram_gradient");
  check_finite(X, "gram_gradient");
  const Eigen::Index t = X.rows();
  const Eigen::Index d = spec.dimension();
  Eigen::MatrixXd A = X * spec.lengthscales.cwiseInverse().asDiagonal();
  std::vector<Eigen::MatrixXd> grads(static_cast<std::size_t>(d),
                                     Eigen::MatrixXd::Zero(t, t));
  for (Eigen::Index i = 0; i < t; ++i) {
    for (Eigen::Index j = 0; j < i; ++j) {
      const Eigen::VectorXd diff2 = (A.row(i) - A.row(j)).array().square();
      const double h = detail::gradient_prefactor(spec.family, diff2.sum());
      for (Eigen::Index k = 0; k < d; ++k) {
        const double g = h * diff2[k];
        grads[static_cast<std::size_t>(k)](i, j) = g;
        grads[static_cast<std::size_t>(k)](j, i) = g;
      }
    }
  }
  return grads;
}

}  // namespace gpal::kernels
