#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace gpal::kernels {

enum class Family { SquaredExponential, Matern32, Matern52 };

// Accepts "se", "squared_exponential", "matern32", "matern52" (and "rbf").
Family family_from_name(const std::string& name);
std::string family_name(Family family);

// Stationary covariance with unit prior variance and one positive length
// scale per input dimension. The value depends on (u, v) only through the
// scaled distance r, r^2 = sum_j ((u_j - v_j) / l_j)^2.
struct Spec {
  Family family = Family::SquaredExponential;
  Eigen::VectorXd lengthscales;

  Eigen::Index dimension() const { return lengthscales.size(); }
  void validate() const;
};

/// k(u, v). Exactly 1 at u = v, in (0, 1] elsewhere, symmetric.
double eval(const Spec& spec, const Eigen::VectorXd& u, const Eigen::VectorXd& v);

/// K(i, j) = k(X.row(i), X.row(j)). Exactly symmetric with unit diagonal.
Eigen::MatrixXd gram_matrix(const Spec& spec, const Eigen::MatrixXd& X);

/// Entry i = k(X.row(i), u).
Eigen::VectorXd cross_vector(const Spec& spec, const Eigen::MatrixXd& X,
                             const Eigen::VectorXd& u);

/// Out(i, j) = k(X.row(i), U.row(j)).
Eigen::MatrixXd cross_matrix(const Spec& spec, const Eigen::MatrixXd& X,
                             const Eigen::MatrixXd& U);

/// Derivatives of the Gram matrix with respect to log(l_j), one matrix per
/// dimension. Each is symmetric with zero diagonal.
std::vector<Eigen::MatrixXd> gram_gradient(const Spec& spec, const Eigen::MatrixXd& X);

namespace detail {

// Covariance value from the squared scaled distance.
double value_from_sqdist(Family family, double sqdist);

// Prefactor h with d k / d log(l_j) = h(r) * s_j, where s_j is the per
// dimension term of r^2. Finite everywhere, zero contribution at r = 0.
double gradient_prefactor(Family family, double sqdist);

// Fills out(i, j) = k between row i of A and row j of B, where A and B hold
// points already multiplied elementwise by the reciprocal length scales.
// `out` must be sized rows(A) x rows(B). Column j is computed independently
// of the others.
void cross_block_scaled(Family family, const Eigen::MatrixXd& A,
                        const Eigen::MatrixXd& B, Eigen::Ref<Eigen::MatrixXd> out);

}  // namespace detail

}  // namespace gpal::kernels
