#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "gpal/active_loop.hpp"
#include "gpal/metrics.hpp"
#include "gpal/sampling.hpp"
#include "gpal/stopping.hpp"
#include "gpal/trace.hpp"

namespace gpal::experiments {

inline constexpr int kSchemaVersion = 1;

// Oracle selector: a built-in name or an external command.
struct OracleSpec {
  std::string kind;         // salt_1d | salt_2d | calcite | dolomite | external
  std::string command;      // external only
  double timeout_seconds = 60.0;  // external only
  bool cache = true;              // external only: memoize by exact point
  std::string system_file;  // carbonate oracles: chemical-system JSON path

  void validate() const;
  long dimension() const;  // -1 when unknown (external)
  /// Stable identity used to key the ground-truth cache.
  std::string identity() const;
};

struct GridSpec {
  std::string type;          // regular | lhs | csv
  std::vector<long> counts;  // regular
  long dimension = 0;        // lhs
  long count = 0;            // lhs
  std::uint64_t seed = 0;    // lhs
  bool centered = false;     // lhs
  std::string path;          // csv

  void validate() const;
  sampling::CandidateGrid build() const;
};

// Which grid points ground truth (and hence every metric) is computed on.
struct MetricPolicy {
  std::string mode = "full";  // full | subsample
  long count = 2000;          // subsample size
  std::uint64_t seed = 0;

  void validate() const;
};

struct ExperimentConfig {
  OracleSpec oracle;
  GridSpec grid;
  std::vector<kernels::Family> kernels;  // may be empty: header-only reports
  long replications = 10;
  std::uint64_t base_seed = 1;                       // seed of replication i is base_seed + i
  std::optional<std::vector<std::uint64_t>> seeds;   // explicit override, pairwise distinct
  long t1 = 3;
  long budget = 40;
  std::vector<stopping::Criterion> criteria;  // compared offline after each run
  MetricPolicy metrics;
  loop::Normalization normalization = loop::Normalization::Standardize;
  long refit_every = 1;
  long snapshot_every = 1;
  gp::OptimizerConfig optimizer;  // per-iteration seed is derived inside the loop
  bool record_timing = false;
  std::string output_dir;

  void validate() const;
  std::vector<std::uint64_t> replication_seeds() const;

  static ExperimentConfig from_json(std::istream& in);
  static ExperimentConfig from_json_file(const std::string& path);
  std::string to_json() const;  // pretty-printed echo
};

/// Instantiates the selected oracle. External commands are spawned lazily on
/// the first query; the returned callable shares one subprocess and cache.
loop::Oracle make_oracle(const OracleSpec& spec);

struct RunRecord {
  std::string kernel;
  long replication = 0;  // 0-based
  trace::RunTrace trace;
  std::string status;  // terminal status of the run
};

// Offline stopping analysis of one run.
struct CriterionReplay {
  std::string criterion;
  long t_star = 0;
  bool fired = false;  // false = budget-capped
  double mae = 0.0;
  double rmse = 0.0;
  double sup_norm = 0.0;
  double variance = 0.0;  // V(t*)
};

/// Evaluates every criterion on the recorded variance history without
/// re-running the loop. A criterion that never fires reports the last
/// recorded iteration with fired = false. Throws when the metric snapshot at
/// a chosen iteration is missing.
std::vector<CriterionReplay> replay_stopping(const trace::RunTrace& trace,
                                             const std::vector<stopping::Criterion>& criteria);

struct StoppingRow {
  std::string kernel;
  long replication = 0;
  CriterionReplay replay;
};

struct ExperimentReport {
  ExperimentConfig config;
  std::vector<std::uint64_t> seeds;  // resolved per-replication seeds
  std::vector<RunRecord> runs;       // kernel-major, replication-minor order
  std::vector<StoppingRow> stopping;
  long ground_truth_requested = 0;
  long ground_truth_failed = 0;  // oracle failures skipped with a warning
  bool partial = false;          // some run did not complete

  void validate() const;
};

/// Runs the full protocol: one loop per kernel x replication to the budget
/// (no live criterion), metric snapshots against a shared ground truth, then
/// offline stopping replay. Writes all report files into config.output_dir.
ExperimentReport run_experiment(const ExperimentConfig& config);

/// Writes metrics.csv (long format), stopping_summary.csv, config.json echo,
/// and per-run traces/metric CSVs under `directory`.
void emit_report(const ExperimentReport& report, const std::string& directory);

/// Long-format metric table: kernel, replication, t, metric, value. Aggregate
/// rows (replication = mean | std over completed runs) follow the raw rows.
void write_metrics_csv(std::ostream& out, const ExperimentReport& report);
void write_stopping_csv(std::ostream& out, const ExperimentReport& report);

}  // namespace gpal::experiments
