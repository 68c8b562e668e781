// Command-line front end: run experiments from JSON configs, replay stopping
// rules on stored traces, query built-in oracles, and emit candidate grids.
#include <cstdio>
#include <iostream>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "gpal/experiments.hpp"

namespace {

namespace experiments = gpal::experiments;
using experiments::ExperimentConfig;

std::string format_double(double value) {
  char buffer[64];
  std::snprintf(buffer, sizeof(buffer), "%.17g", value);
  return buffer;
}

std::vector<double> parse_point(const std::string& text) {
  std::vector<double> out;
  std::istringstream in(text);
  std::string field;
  while (std::getline(in, field, ',')) {
    std::size_t used = 0;
    double value = 0.0;
    try {
      value = std::stod(field, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != field.size() || field.empty()) {
      throw std::runtime_error("cannot parse point coordinate: " + field);
    }
    out.push_back(value);
  }
  if (out.empty()) throw std::runtime_error("empty point");
  return out;
}

// Streams to stdout when the path is empty or "-".
class OutputTarget {
 public:
  explicit OutputTarget(const std::string& path) {
    if (path.empty() || path == "-") return;
    file_.open(path);
    if (!file_) throw std::runtime_error("cannot open for writing: " + path);
  }
  std::ostream& stream() { return file_.is_open() ? file_ : std::cout; }

 private:
  std::ofstream file_;
};

struct GridFlags {
  std::string type;
  std::vector<long> counts;
  long dimension = 0;
  long count = 0;
  std::uint64_t seed = 0;
  bool centered = false;
  std::string path;
};

// Registers the grid-shape options on a subcommand; `merge` copies the flags
// the user actually passed onto a GridSpec.
void add_grid_options(CLI::App* cmd, GridFlags& flags) {
  cmd->add_option("--grid-type", flags.type, "Grid construction: regular | lhs | csv");
  cmd->add_option("--grid-counts", flags.counts,
                  "regular: comma-separated points per dimension, e.g. 200,200")
      ->delimiter(',');
  cmd->add_option("--grid-dimension", flags.dimension, "lhs: input dimension");
  cmd->add_option("--grid-count", flags.count, "lhs: number of points");
  cmd->add_option("--grid-seed", flags.seed, "lhs: placement seed");
  cmd->add_flag("--grid-centered", flags.centered, "lhs: place points at slab centers");
  cmd->add_option("--grid-path", flags.path, "csv: file of unit-cube points");
}

void merge_grid_flags(const CLI::App* cmd, const GridFlags& flags, experiments::GridSpec& grid) {
  if (cmd->count("--grid-type")) grid.type = flags.type;
  if (cmd->count("--grid-counts")) grid.counts = flags.counts;
  if (cmd->count("--grid-dimension")) grid.dimension = flags.dimension;
  if (cmd->count("--grid-count")) grid.count = flags.count;
  if (cmd->count("--grid-seed")) grid.seed = flags.seed;
  if (cmd->count("--grid-centered")) grid.centered = flags.centered;
  if (cmd->count("--grid-path")) grid.path = flags.path;
}

struct OracleFlags {
  std::string kind;
  std::string command;
  double timeout_seconds = 60.0;
  bool no_cache = false;
  std::string system_file;
};

void add_oracle_options(CLI::App* cmd, OracleFlags& flags) {
  cmd->add_option("--oracle-kind", flags.kind,
                  "Oracle: salt_1d | salt_2d | calcite | dolomite | external");
  cmd->add_option("--oracle-command", flags.command, "external: shell command to spawn");
  cmd->add_option("--oracle-timeout", flags.timeout_seconds,
                  "external: per-query timeout in seconds");
  cmd->add_flag("--no-oracle-cache", flags.no_cache, "external: disable point memoization");
  cmd->add_option("--system-file", flags.system_file,
                  "calcite/dolomite: chemical-system JSON file");
}

void merge_oracle_flags(const CLI::App* cmd, const OracleFlags& flags,
                        experiments::OracleSpec& oracle) {
  if (cmd->count("--oracle-kind")) oracle.kind = flags.kind;
  if (cmd->count("--oracle-command")) oracle.command = flags.command;
  if (cmd->count("--oracle-timeout")) oracle.timeout_seconds = flags.timeout_seconds;
  if (cmd->count("--no-oracle-cache")) oracle.cache = false;
  if (cmd->count("--system-file")) oracle.system_file = flags.system_file;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Active-learning surrogate toolkit: sequential max-variance design\n"
               "on Gaussian-process surrogates over expensive oracles."};
  app.require_subcommand(1);

  // ---- run ----------------------------------------------------------------
  auto* run_cmd = app.add_subcommand("run", "Execute an experiment described by a JSON config");
  std::string run_config_path;
  run_cmd->add_option("--config", run_config_path, "Experiment config JSON file")
      ->check(CLI::ExistingFile);
  OracleFlags run_oracle;
  add_oracle_options(run_cmd, run_oracle);
  GridFlags run_grid;
  add_grid_options(run_cmd, run_grid);
  std::vector<std::string> run_kernels;
  run_cmd->add_option("--kernels", run_kernels, "Kernel families: se | matern32 | matern52")
      ->delimiter(',');
  long run_replications = 0;
  run_cmd->add_option("--replications", run_replications, "Independent initial-design draws");
  std::uint64_t run_base_seed = 0;
  run_cmd->add_option("--base-seed", run_base_seed, "Replication i uses seed base+i");
  std::vector<std::uint64_t> run_seeds;
  run_cmd->add_option("--seeds", run_seeds, "Explicit per-replication seeds")->delimiter(',');
  long run_t1 = 0;
  run_cmd->add_option("--t1", run_t1, "Initial design size");
  long run_budget = 0;
  run_cmd->add_option("--budget", run_budget, "Total oracle evaluations per run");
  std::vector<std::string> run_criteria;
  run_cmd
      ->add_option("--criteria", run_criteria,
                   "Stopping rules to replay, e.g. ratio_variance_5,mobile_average_10")
      ->delimiter(',');
  std::string run_metric_mode;
  run_cmd->add_option("--metric-mode", run_metric_mode, "Metric test set: full | subsample");
  long run_metric_count = 0;
  run_cmd->add_option("--metric-count", run_metric_count, "subsample: test-set size");
  std::uint64_t run_metric_seed = 0;
  run_cmd->add_option("--metric-seed", run_metric_seed, "subsample: selection seed");
  std::string run_normalization;
  run_cmd->add_option("--normalization", run_normalization,
                      "Observation scaling: none | standardize | minmax");
  long run_refit_every = 0;
  run_cmd->add_option("--refit-every", run_refit_every, "Re-estimate length scales every k-th t");
  long run_snapshot_every = 0;
  run_cmd->add_option("--snapshot-every", run_snapshot_every, "Metric snapshot cadence");
  int run_opt_restarts = 0;
  run_cmd->add_option("--opt-restarts", run_opt_restarts, "Length-scale optimizer restarts");
  double run_opt_lower = 0.0;
  run_cmd->add_option("--opt-lower-bound", run_opt_lower, "Length-scale lower bound");
  double run_opt_upper = 0.0;
  run_cmd->add_option("--opt-upper-bound", run_opt_upper, "Length-scale upper bound");
  int run_opt_max_iterations = 0;
  run_cmd->add_option("--opt-max-iterations", run_opt_max_iterations, "Optimizer iteration cap");
  double run_opt_gradient_tolerance = 0.0;
  run_cmd->add_option("--opt-gradient-tolerance", run_opt_gradient_tolerance,
                      "Optimizer projected-gradient tolerance");
  bool run_record_timing = false;
  run_cmd->add_flag("--record-timing", run_record_timing, "Record per-iteration wall time");
  std::string run_output_dir;
  run_cmd->add_option("--output-dir", run_output_dir, "Report directory (required)");

  run_cmd->callback([&] {
    ExperimentConfig config;
    if (!run_config_path.empty()) config = ExperimentConfig::from_json_file(run_config_path);
    merge_oracle_flags(run_cmd, run_oracle, config.oracle);
    merge_grid_flags(run_cmd, run_grid, config.grid);
    if (run_cmd->count("--kernels")) {
      config.kernels.clear();
      for (const auto& name : run_kernels) {
        config.kernels.push_back(gpal::kernels::family_from_name(name));
      }
    }
    if (run_cmd->count("--replications")) config.replications = run_replications;
    if (run_cmd->count("--base-seed")) config.base_seed = run_base_seed;
    if (run_cmd->count("--seeds")) config.seeds = run_seeds;
    if (run_cmd->count("--t1")) config.t1 = run_t1;
    if (run_cmd->count("--budget")) config.budget = run_budget;
    if (run_cmd->count("--criteria")) {
      config.criteria.clear();
      for (const auto& name : run_criteria) {
        config.criteria.push_back(gpal::stopping::Criterion::parse(name));
      }
    }
    if (run_cmd->count("--metric-mode")) config.metrics.mode = run_metric_mode;
    if (run_cmd->count("--metric-count")) config.metrics.count = run_metric_count;
    if (run_cmd->count("--metric-seed")) config.metrics.seed = run_metric_seed;
    if (run_cmd->count("--normalization")) {
      config.normalization = gpal::loop::normalization_from_name(run_normalization);
    }
    if (run_cmd->count("--refit-every")) config.refit_every = run_refit_every;
    if (run_cmd->count("--snapshot-every")) config.snapshot_every = run_snapshot_every;
    if (run_cmd->count("--opt-restarts")) config.optimizer.restarts = run_opt_restarts;
    if (run_cmd->count("--opt-lower-bound")) config.optimizer.lower_bound = run_opt_lower;
    if (run_cmd->count("--opt-upper-bound")) config.optimizer.upper_bound = run_opt_upper;
    if (run_cmd->count("--opt-max-iterations")) {
      config.optimizer.max_iterations = run_opt_max_iterations;
    }
    if (run_cmd->count("--opt-gradient-tolerance")) {
      config.optimizer.gradient_tolerance = run_opt_gradient_tolerance;
    }
    if (run_cmd->count("--record-timing")) config.record_timing = true;
    if (run_cmd->count("--output-dir")) config.output_dir = run_output_dir;

    if (config.output_dir.empty()) {
      throw std::runtime_error("run requires an output directory (--output-dir or output_dir)");
    }
    config.validate();
    const experiments::ExperimentReport report = experiments::run_experiment(config);
    for (const auto& run : report.runs) {
      std::cout << run.kernel << " rep " << run.replication << ": " << run.status << " ("
                << run.trace.terminal.stopped_t << " evaluations)\n";
    }
    std::cout << "report written to " << config.output_dir << "\n";
    if (report.partial) std::cout << "warning: partial report, some runs aborted\n";
  });

  // ---- replay ---------------------------------------------------------------
  auto* replay_cmd =
      app.add_subcommand("replay", "Evaluate stopping rules offline on stored trace files");
  std::vector<std::string> replay_traces;
  replay_cmd->add_option("traces", replay_traces, "JSON-lines trace files")
      ->required()
      ->check(CLI::ExistingFile);
  std::vector<std::string> replay_criteria;
  replay_cmd->add_option("--criteria", replay_criteria, "Stopping rules to evaluate")
      ->required()
      ->delimiter(',');
  std::string replay_out;
  replay_cmd->add_option("--out", replay_out, "Output CSV path (default stdout)");

  replay_cmd->callback([&] {
    std::vector<gpal::stopping::Criterion> criteria;
    for (const auto& name : replay_criteria) {
      criteria.push_back(gpal::stopping::Criterion::parse(name));
    }
    OutputTarget target(replay_out);
    std::ostream& out = target.stream();
    out << "trace,criterion,t_star,fired,mae,rmse,sup_norm,V\n";
    for (const auto& path : replay_traces) {
      const gpal::trace::RunTrace trace = gpal::trace::read_jsonl_file(path);
      for (const auto& row : experiments::replay_stopping(trace, criteria)) {
        out << path << ',' << row.criterion << ',' << row.t_star << ','
            << (row.fired ? "fired" : "budget-capped") << ',' << format_double(row.mae) << ','
            << format_double(row.rmse) << ',' << format_double(row.sup_norm) << ','
            << format_double(row.variance) << '\n';
      }
    }
  });

  // ---- oracle ---------------------------------------------------------------
  auto* oracle_cmd =
      app.add_subcommand("oracle", "Query an oracle at unit-cube points (debugging aid)");
  OracleFlags oracle_flags;
  add_oracle_options(oracle_cmd, oracle_flags);
  std::vector<std::string> oracle_points;
  oracle_cmd->add_option("--point", oracle_points,
                         "Unit-cube point as comma-separated coordinates; repeatable");
  std::string oracle_points_csv;
  oracle_cmd->add_option("--points-csv", oracle_points_csv, "CSV of unit-cube points")
      ->check(CLI::ExistingFile);
  std::string oracle_out;
  oracle_cmd->add_option("--out", oracle_out, "Output CSV path (default stdout)");

  oracle_cmd->callback([&] {
    experiments::OracleSpec spec;
    merge_oracle_flags(oracle_cmd, oracle_flags, spec);
    const gpal::loop::Oracle oracle = experiments::make_oracle(spec);

    std::vector<Eigen::VectorXd> points;
    for (const auto& text : oracle_points) {
      const std::vector<double> coords = parse_point(text);
      points.push_back(Eigen::Map<const Eigen::VectorXd>(coords.data(),
                                                         static_cast<long>(coords.size())));
    }
    if (!oracle_points_csv.empty()) {
      const auto grid = gpal::sampling::grid_from_csv_file(oracle_points_csv);
      for (Eigen::Index i = 0; i < grid.size(); ++i) {
        points.push_back(grid.points.row(i).transpose());
      }
    }
    if (points.empty()) throw std::runtime_error("no points given (--point or --points-csv)");

    OutputTarget target(oracle_out);
    std::ostream& out = target.stream();
    const Eigen::Index d = points.front().size();
    for (Eigen::Index j = 0; j < d; ++j) out << 'x' << j << ',';
    out << "y\n";
    for (const auto& point : points) {
      for (Eigen::Index j = 0; j < point.size(); ++j) out << format_double(point(j)) << ',';
      out << format_double(oracle(point)) << '\n';
    }
  });

  // ---- grid -----------------------------------------------------------------
  auto* grid_cmd = app.add_subcommand("grid", "Emit a candidate grid as CSV");
  GridFlags grid_flags;
  add_grid_options(grid_cmd, grid_flags);
  std::string grid_out;
  grid_cmd->add_option("--out", grid_out, "Output CSV path (default stdout)");

  grid_cmd->callback([&] {
    experiments::GridSpec spec;
    merge_grid_flags(grid_cmd, grid_flags, spec);
    const gpal::sampling::CandidateGrid grid = spec.build();
    OutputTarget target(grid_out);
    gpal::sampling::write_grid_csv(target.stream(), grid.points);
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& error) {
    return app.exit(error);
  } catch (const std::exception& error) {
    std::cerr << "error: " << error.what() << "\n";
    return 1;
  }
  return 0;
}
