#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "gpal/metrics.hpp"
#include "gpal/stopping.hpp"

namespace gpal::trace {

inline constexpr int kSchemaVersion = 1;

// Run-level metadata, serialized as the first JSON line of a trace.
struct Header {
  int schema_version = kSchemaVersion;
  std::string kernel;
  std::string grid;  // candidate-grid provenance string
  long grid_size = 0;
  long dimension = 0;
  long t1 = 0;      // initial design size
  long budget = 0;  // hard cap on oracle calls
  std::uint64_t seed = 0;
  std::string normalization;  // none | standardize | minmax
  std::string criterion;      // live stopping rule; empty = run to budget
  bool record_timing = false;
};

// Surrogate state after incorporating the observation of the same record.
struct FitInfo {
  Eigen::VectorXd lengthscales;
  double variance = 0.0;  // max posterior variance over the full grid
  double lml = 0.0;       // log marginal likelihood at the fitted scales
  bool refit = false;     // length scales re-estimated this iteration
  std::vector<metrics::MetricValue> metric_snapshot;
};

// One oracle call. Records before the initial design completes carry no fit.
struct Record {
  long t = 0;  // 1-based oracle call index
  long grid_index = -1;
  Eigen::VectorXd point;  // unit-cube coordinates
  double value = 0.0;     // oracle value, raw scale
  std::optional<FitInfo> fit;
  std::optional<double> wall_time;  // seconds since run start
};

// Why and when the loop ended, serialized as the last JSON line.
struct Terminal {
  std::string status;  // completed | criterion_fired | grid_exhausted | aborted
  long stopped_t = 0;  // oracle calls performed
  std::string criterion;  // rule that fired, when status == criterion_fired
  std::string message;
};

struct RunTrace {
  Header header;
  std::vector<Record> records;
  Terminal terminal;

  void validate() const;
  /// V(t) sequence from the fitted records, indexed by oracle-call count.
  stopping::VarianceHistory variance_history() const;
};

void write_jsonl(std::ostream& out, const RunTrace& trace);
RunTrace read_jsonl(std::istream& in);
void write_jsonl_file(const std::string& path, const RunTrace& trace);
RunTrace read_jsonl_file(const std::string& path);

/// Per-record flat table: call index, point, value, fit summary, metrics,
/// length scales. Fields absent from a record are left empty.
void write_csv_summary(std::ostream& out, const RunTrace& trace);
void write_csv_summary_file(const std::string& path, const RunTrace& trace);

}  // namespace gpal::trace
