#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace gpal::metrics {

// True oracle values on a fixed evaluation set, with the value range used by
// the normalized error measures.
struct GroundTruth {
  Eigen::MatrixXd points;  // one evaluation point per row (unit cube)
  Eigen::VectorXd values;
  double y_min = 0.0;
  double y_max = 0.0;

  static GroundTruth from_values(Eigen::MatrixXd points, Eigen::VectorXd values);
  double range() const { return y_max - y_min; }
  void validate() const;
};

/// Mean absolute error. Errors on empty or mismatched inputs.
double mae(const Eigen::VectorXd& truth, const Eigen::VectorXd& predictions);

/// Root mean squared error; always >= mae on the same inputs.
double rmse(const Eigen::VectorXd& truth, const Eigen::VectorXd& predictions);

/// Largest absolute error; always >= rmse on the same inputs.
double sup_norm(const Eigen::VectorXd& truth, const Eigen::VectorXd& predictions);

/// mae / (y_max - y_min). Errors with "degenerate range" when y_max == y_min.
double normalized_mae(const Eigen::VectorXd& truth, const Eigen::VectorXd& predictions,
                      double y_min, double y_max);
double normalized_sup_norm(const Eigen::VectorXd& truth, const Eigen::VectorXd& predictions,
                           double y_min, double y_max);

struct MetricValue {
  std::string name;
  double value;
};

/// All five error measures in report order: mae, normalized_mae, rmse,
/// sup_norm, normalized_sup_norm. Range taken from the ground truth.
std::vector<MetricValue> all_metrics(const GroundTruth& truth, const Eigen::VectorXd& predictions);

}  // namespace gpal::metrics
