#pragma once

#include <optional>
#include <string>
#include <vector>

namespace gpal::stopping {

// Max-grid-variance history V(t), one entry per loop iteration starting at
// the iteration where the first surrogate was fitted.
struct VarianceHistory {
  long first_t = 0;            // iteration index of values.front()
  std::vector<double> values;  // all entries >= 0

  long size() const { return static_cast<long>(values.size()); }
  bool empty() const { return values.empty(); }
  long latest_t() const { return first_t + size() - 1; }
  bool has(long t) const { return t >= first_t && t <= latest_t(); }
  double at(long t) const;
  void append(double v);
};

enum class CriterionKind { RatioVariance, MobileAverage, MaxVariance };

// A stopping rule over the V(t) history.
//   ratio_variance_k:  fires iff 0.9 < V(t)/V(t-k) < 1/0.9
//   smoothed_ratio_variance_k:  same thresholds on the k-1 term average
//       (1/(k-1)) sum_{i=1}^{k-1} V(t-i+1)/V(t-i-k+1)
//   mobile_average_l:  fires iff mean of the last l values < 0.01
//   max_variance_s:    fires iff V(t) < s
struct Criterion {
  CriterionKind kind = CriterionKind::MaxVariance;
  long window = 0;      // k (>= 2) or l (>= 1); unused for MaxVariance
  double threshold = 0.01;  // s for MaxVariance; firing band/level otherwise
  bool smoothed = false;    // RatioVariance only: averaged-ratio variant

  void validate() const;
  std::string name() const;
  static Criterion parse(const std::string& name);

  static Criterion ratio_variance(long k, bool smoothed = false);
  static Criterion mobile_average(long l);
  static Criterion max_variance(double s);
};

inline constexpr double kRatioThreshold = 0.9;
inline constexpr double kMobileAverageThreshold = 0.01;

/// V(t)/V(t-k), or the averaged variant when `smoothed`. Empty when the
/// history does not reach back far enough. Degenerate zero denominators
/// surface as non-finite values; evaluate() classifies them.
std::optional<double> ratio_variance(const VarianceHistory& h, long k, bool smoothed = false);

/// Mean of the last l values of V. Empty when fewer than l records exist.
std::optional<double> mobile_average(const VarianceHistory& h, long l);

struct Decision {
  bool ready = false;       // enough history to evaluate
  bool fired = false;
  bool degenerate = false;  // a ratio denominator was zero: variance already
                            // collapsed, reported as fired
  double value = 0.0;       // criterion statistic when ready and not degenerate
};

Decision evaluate(const Criterion& spec, const VarianceHistory& h);

/// Not-ready histories never stop the loop.
bool should_stop(const Criterion& spec, const VarianceHistory& h);

/// First iteration t at which the criterion fires when replayed over
/// successive prefixes of the history; empty if it never fires.
std::optional<long> first_firing_iteration(const Criterion& spec, const VarianceHistory& h);

}  // namespace gpal::stopping
