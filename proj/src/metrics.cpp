#include "gpal/metrics.hpp"

#include <cmath>
#include <stdexcept>

namespace gpal::metrics {

GroundTruth GroundTruth::from_values(Eigen::MatrixXd points, Eigen::VectorXd values) {
  GroundTruth gt;
  gt.points = std::move(points);
  gt.values = std::move(values);
  if (gt.values.size() == 0) {
    throw std::invalid_argument("GroundTruth: values must be non-empty");
  }
  if (gt.points.rows() != gt.values.size()) {
    throw std::invalid_argument("GroundTruth: point and value counts differ");
  }
  gt.y_min = gt.values.minCoeff();
  gt.y_max = gt.values.maxCoeff();
  gt.validate();
  return gt;
}

void GroundTruth::validate() const {
  if (values.size() == 0) throw std::invalid_argument("GroundTruth: values must be non-empty");
  if (!values.allFinite()) throw std::invalid_argument("GroundTruth: values must be finite");
  if (!(y_max >= y_min)) throw std::invalid_argument("GroundTruth: y_max must be >= y_min");
}

namespace {

void check_pair(const Eigen::VectorXd& truth, const Eigen::VectorXd& predictions,
                const char* op) {
  if (truth.size() == 0) {
    throw std::invalid_argument(std::string(op) + ": inputs must be non-empty");
  }
  if (truth.size() != predictions.size()) {
    throw std::invalid_argument(std::string(op) + ": truth has " + std::to_string(truth.size()) +
                                " entries, predictions " + std::to_string(predictions.size()));
  }
}

double checked_range(double y_min, double y_max, const char* op) {
  if (!(y_max > y_min)) {
    throw std::invalid_argument(std::string(op) + ": degenerate range (y_max == y_min)");
  }
  return y_max - y_min;
}

}  // namespace

double mae(const Eigen::VectorXd& truth, const Eigen::VectorXd& predictions) {
  check_pair(truth, predictions, "mae");
  // Fixed left-to-right accumulation keeps reports bitwise reproducible.
  double sum = 0.0;
  for (Eigen::Index i = 0; i < truth.size(); ++i) {
    sum += std::abs(truth[i] - predictions[i]);
  }
  return sum / static_cast<double>(truth.size());
}

double rmse(const Eigen::VectorXd& truth, const Eigen::VectorXd& predictions) {
  check_pair(truth, predictions, "rmse");
  double sum = 0.0;
  for (Eigen::Index i = 0; i < truth.size(); ++i) {
    const double d = truth[i] - predictions[i];
    sum += d * d;
  }
  return std::sqrt(sum / static_cast<double>(truth.size()));
}

double sup_norm(const Eigen::VectorXd& truth, const Eigen::VectorXd& predictions) {
  check_pair(truth, predictions, "sup_norm");
  return (truth - predictions).cwiseAbs().maxCoeff();
}

double normalized_mae(const Eigen::VectorXd& truth, const Eigen::VectorXd& predictions,
                      double y_min, double y_max) {
  return mae(truth, predictions) / checked_range(y_min, y_max, "normalized_mae");
}

double normalized_sup_norm(const Eigen::VectorXd& truth, const Eigen::VectorXd& predictions,
                           double y_min, double y_max) {
  return sup_norm(truth, predictions) / checked_range(y_min, y_max, "normalized_sup_norm");
}

std::vector<MetricValue> all_metrics(const GroundTruth& truth,
                                     const Eigen::VectorXd& predictions) {
  truth.validate();
  return {
      {"mae", mae(truth.values, predictions)},
      {"normalized_mae", normalized_mae(truth.values, predictions, truth.y_min, truth.y_max)},
      {"rmse", rmse(truth.values, predictions)},
      {"sup_norm", sup_norm(truth.values, predictions)},
      {"normalized_sup_norm",
       normalized_sup_norm(truth.values, predictions, truth.y_min, truth.y_max)},
  };
}

}  // namespace gpal::metrics
