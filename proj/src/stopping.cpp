#include "gpal/stopping.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace gpal::stopping {

double VarianceHistory::at(long t) const {
  if (!has(t)) {
    throw std::out_of_range("VarianceHistory: iteration " + std::to_string(t) +
                            " outside recorded range");
  }
  return values[static_cast<std::size_t>(t - first_t)];
}

void VarianceHistory::append(double v) {
  if (!(v >= 0.0)) {
    throw std::invalid_argument("VarianceHistory: variance must be non-negative, got " +
                                std::to_string(v));
  }
  values.push_back(v);
}

void Criterion::validate() const {
  switch (kind) {
    case CriterionKind::RatioVariance:
      if (window < 2) throw std::invalid_argument("ratio_variance: k must be >= 2");
      break;
    case CriterionKind::MobileAverage:
      if (window < 1) throw std::invalid_argument("mobile_average: window must be >= 1");
      break;
    case CriterionKind::MaxVariance:
      if (!(threshold > 0.0)) throw std::invalid_argument("max_variance: threshold must be > 0");
      break;
  }
}

std::string Criterion::name() const {
  switch (kind) {
    case CriterionKind::RatioVariance:
      return (smoothed ? std::string("smoothed_ratio_variance_") : std::string("ratio_variance_")) +
             std::to_string(window);
    case CriterionKind::MobileAverage:
      return "mobile_average_" + std::to_string(window);
    case CriterionKind::MaxVariance: {
      char buf[64];
      std::snprintf(buf, sizeof(buf), "max_variance_%g", threshold);
      return buf;
    }
  }
  throw std::logic_error("Criterion::name: unknown kind");
}

namespace {

bool consume_prefix(std::string& s, const std::string& prefix) {
  if (s.rfind(prefix, 0) != 0) return false;
  s.erase(0, prefix.size());
  return true;
}

long parse_long(const std::string& s, const std::string& what) {
  std::size_t pos = 0;
  long v = 0;
  try {
    v = std::stol(s, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos != s.size() || pos == 0) {
    throw std::invalid_argument("Criterion::parse: cannot read " + what + " from '" + s + "'");
  }
  return v;
}

double parse_double(const std::string& s, const std::string& what) {
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos != s.size() || pos == 0) {
    throw std::invalid_argument("Criterion::parse: cannot read " + what + " from '" + s + "'");
  }
  return v;
}

}  // namespace

Criterion Criterion::parse(const std::string& name) {
  std::string rest = name;
  if (consume_prefix(rest, "smoothed_ratio_variance_")) {
    return ratio_variance(parse_long(rest, "k"), true);
  }
  if (consume_prefix(rest, "ratio_variance_")) {
    return ratio_variance(parse_long(rest, "k"), false);
  }
  if (consume_prefix(rest, "mobile_average_")) {
    return mobile_average(parse_long(rest, "window"));
  }
  if (consume_prefix(rest, "max_variance_")) {
    return max_variance(parse_double(rest, "threshold"));
  }
  throw std::invalid_argument(
      "Criterion::parse: unrecognized criterion '" + name +
      "'; expected ratio_variance_<k>, smoothed_ratio_variance_<k>, "
      "mobile_average_<window>, or max_variance_<threshold>");
}

Criterion Criterion::ratio_variance(long k, bool smoothed) {
  Criterion c;
  c.kind = CriterionKind::RatioVariance;
  c.window = k;
  c.threshold = kRatioThreshold;
  c.smoothed = smoothed;
  c.validate();
  return c;
}

Criterion Criterion::mobile_average(long l) {
  Criterion c;
  c.kind = CriterionKind::MobileAverage;
  c.window = l;
  c.threshold = kMobileAverageThreshold;
  c.validate();
  return c;
}

Criterion Criterion::max_variance(double s) {
  Criterion c;
  c.kind = CriterionKind::MaxVariance;
  c.threshold = s;
  c.validate();
  return c;
}

std::optional<double> ratio_variance(const VarianceHistory& h, long k, bool smoothed) {
  if (k < 2) throw std::invalid_argument("ratio_variance: k must be >= 2");
  if (h.empty()) return std::nullopt;
  const long t = h.latest_t();
  if (!smoothed) {
    if (!h.has(t - k)) return std::nullopt;
    return h.at(t) / h.at(t - k);
  }
  // Averaged variant: (1/(k-1)) sum_{i=1}^{k-1} V(t-i+1)/V(t-i-k+1).
  if (!h.has(t - 2 * k + 2)) return std::nullopt;
  double sum = 0.0;
  for (long i = 1; i <= k - 1; ++i) {
    sum += h.at(t - i + 1) / h.at(t - i - k + 1);
  }
  return sum / static_cast<double>(k - 1);
}

std::optional<double> mobile_average(const VarianceHistory& h, long l) {
  if (l < 1) throw std::invalid_argument("mobile_average: window must be >= 1");
  if (h.size() < l) return std::nullopt;
  double sum = 0.0;
  for (long j = 0; j < l; ++j) {
    sum += h.at(h.latest_t() - j);
  }
  return sum / static_cast<double>(l);
}

namespace {

bool ratio_denominator_zero(const VarianceHistory& h, long k, bool smoothed) {
  const long t = h.latest_t();
  if (!smoothed) return h.at(t - k) == 0.0;
  for (long i = 1; i <= k - 1; ++i) {
    if (h.at(t - i - k + 1) == 0.0) return true;
  }
  return false;
}

}  // namespace

Decision evaluate(const Criterion& spec, const VarianceHistory& h) {
  spec.validate();
  Decision d;
  switch (spec.kind) {
    case CriterionKind::RatioVariance: {
      const auto r = ratio_variance(h, spec.window, spec.smoothed);
      if (!r) return d;
      d.ready = true;
      if (ratio_denominator_zero(h, spec.window, spec.smoothed)) {
        d.degenerate = true;  // variance already collapsed
        d.fired = true;
        return d;
      }
      d.value = *r;
      d.fired = spec.threshold < d.value && d.value < 1.0 / spec.threshold;
      return d;
    }
    case CriterionKind::MobileAverage: {
      const auto m = mobile_average(h, spec.window);
      if (!m) return d;
      d.ready = true;
      d.value = *m;
      d.fired = d.value < spec.threshold;
      return d;
    }
    case CriterionKind::MaxVariance: {
      if (h.empty()) return d;
      d.ready = true;
      d.value = h.at(h.latest_t());
      d.fired = d.value < spec.threshold;
      return d;
    }
  }
  throw std::logic_error("evaluate: unknown criterion kind");
}

bool should_stop(const Criterion& spec, const VarianceHistory& h) {
  return evaluate(spec, h).fired;
}

std::optional<long> first_firing_iteration(const Criterion& spec, const VarianceHistory& h) {
  spec.validate();
  VarianceHistory prefix;
  prefix.first_t = h.first_t;
  for (long t = h.first_t; t <= h.latest_t() && !h.empty(); ++t) {
    prefix.append(h.at(t));
    if (should_stop(spec, prefix)) return t;
  }
  return std::nullopt;
}

}  // namespace gpal::stopping
