#include "gpal/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <utility>

#include <nlohmann/json.hpp>

#include "gpal/chem.hpp"
#include "gpal/external_oracle.hpp"
#include "gpal/rng.hpp"

namespace gpal::experiments {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::string format_double(double value) {
  char buffer[64];
  std::snprintf(buffer, sizeof(buffer), "%.17g", value);
  return buffer;
}

std::ofstream open_for_writing(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
  return out;
}

double metric_value(const trace::FitInfo& fit, const std::string& name) {
  for (const auto& metric : fit.metric_snapshot) {
    if (metric.name == name) return metric.value;
  }
  throw std::runtime_error("metric snapshot lacks " + name);
}

const trace::Record* find_record(const trace::RunTrace& trace, long t) {
  for (const auto& record : trace.records) {
    if (record.t == t) return &record;
  }
  return nullptr;
}

std::uint64_t fnv1a(const void* data, std::size_t size, std::uint64_t hash) {
  const auto* bytes = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < size; ++i) {
    hash ^= bytes[i];
    hash *= 1099511628211ull;
  }
  return hash;
}

// Cache key over the oracle identity and the exact test-point bytes.
std::string ground_truth_key(const std::string& identity, const Eigen::MatrixXd& points) {
  std::uint64_t hash = fnv1a(identity.data(), identity.size(), 1469598103934665603ull);
  for (Eigen::Index r = 0; r < points.rows(); ++r) {
    for (Eigen::Index c = 0; c < points.cols(); ++c) {
      const double v = points(r, c);
      hash = fnv1a(&v, sizeof(v), hash);
    }
  }
  char buffer[32];
  std::snprintf(buffer, sizeof(buffer), "%016llx", static_cast<unsigned long long>(hash));
  return buffer;
}

Eigen::MatrixXd metric_points(const sampling::CandidateGrid& grid, const MetricPolicy& policy) {
  if (policy.mode == "full" || policy.count >= grid.size()) return grid.points;
  rng::Engine engine(policy.seed);
  std::vector<long> indices = rng::sample_without_replacement(grid.size(), policy.count, engine);
  std::sort(indices.begin(), indices.end());
  Eigen::MatrixXd points(policy.count, grid.dimension());
  for (long i = 0; i < policy.count; ++i) points.row(i) = grid.points.row(indices[i]);
  return points;
}

metrics::GroundTruth compute_ground_truth(const loop::Oracle& oracle,
                                          const Eigen::MatrixXd& test_points, long& failed) {
  std::vector<long> kept;
  std::vector<double> values;
  for (Eigen::Index i = 0; i < test_points.rows(); ++i) {
    const Eigen::VectorXd u = test_points.row(i).transpose();
    try {
      values.push_back(oracle(u));
      kept.push_back(i);
    } catch (const std::exception& error) {
      ++failed;
      std::cerr << "warning: skipping ground-truth point " << i << ": " << error.what() << "\n";
    }
  }
  if (kept.size() < 2) {
    throw std::runtime_error("ground truth: fewer than two test points evaluated successfully");
  }
  Eigen::MatrixXd points(static_cast<long>(kept.size()), test_points.cols());
  Eigen::VectorXd y(static_cast<long>(kept.size()));
  for (std::size_t i = 0; i < kept.size(); ++i) {
    points.row(static_cast<long>(i)) = test_points.row(kept[i]);
    y(static_cast<long>(i)) = values[i];
  }
  return metrics::GroundTruth::from_values(std::move(points), std::move(y));
}

metrics::GroundTruth load_or_compute_truth(const ExperimentConfig& config,
                                           const loop::Oracle& oracle,
                                           const Eigen::MatrixXd& test_points, long& failed) {
  fs::path cache_path;
  if (!config.output_dir.empty()) {
    const std::string key = ground_truth_key(config.oracle.identity(), test_points);
    cache_path = fs::path(config.output_dir) / "cache" / ("ground_truth_" + key + ".csv");
    if (fs::exists(cache_path)) {
      std::ifstream in(cache_path);
      if (!in) throw std::runtime_error("cannot open for reading: " + cache_path.string());
      sampling::GridCsv csv = sampling::read_grid_csv(in);
      const Eigen::Index d = csv.points.cols() - 1;
      if (d != test_points.cols()) {
        throw std::runtime_error("ground-truth cache dimension mismatch: " + cache_path.string());
      }
      metrics::GroundTruth truth =
          metrics::GroundTruth::from_values(csv.points.leftCols(d), csv.points.col(d));
      failed = test_points.rows() - truth.points.rows();
      return truth;
    }
  }
  metrics::GroundTruth truth = compute_ground_truth(oracle, test_points, failed);
  if (!cache_path.empty()) {
    fs::create_directories(cache_path.parent_path());
    Eigen::MatrixXd table(truth.points.rows(), truth.points.cols() + 1);
    table << truth.points, truth.values;
    std::vector<std::string> names;
    for (Eigen::Index j = 0; j < truth.points.cols(); ++j) names.push_back("x" + std::to_string(j));
    names.push_back("y");
    sampling::write_grid_csv_file(cache_path.string(), table, names);
  }
  return truth;
}

json oracle_to_json(const OracleSpec& oracle) {
  json node;
  node["kind"] = oracle.kind;
  if (oracle.kind == "external") {
    node["command"] = oracle.command;
    node["timeout_seconds"] = oracle.timeout_seconds;
    node["cache"] = oracle.cache;
  }
  if (!oracle.system_file.empty()) node["system_file"] = oracle.system_file;
  return node;
}

OracleSpec oracle_from_json(const json& node) {
  OracleSpec oracle;
  oracle.kind = node.at("kind").get<std::string>();
  oracle.command = node.value("command", std::string());
  oracle.timeout_seconds = node.value("timeout_seconds", 60.0);
  oracle.cache = node.value("cache", true);
  oracle.system_file = node.value("system_file", std::string());
  return oracle;
}

json grid_to_json(const GridSpec& grid) {
  json node;
  node["type"] = grid.type;
  if (grid.type == "regular") {
    node["counts"] = grid.counts;
  } else if (grid.type == "lhs") {
    node["dimension"] = grid.dimension;
    node["count"] = grid.count;
    node["seed"] = grid.seed;
    node["centered"] = grid.centered;
  } else if (grid.type == "csv") {
    node["path"] = grid.path;
  }
  return node;
}

GridSpec grid_from_json(const json& node) {
  GridSpec grid;
  grid.type = node.at("type").get<std::string>();
  if (node.contains("counts")) grid.counts = node["counts"].get<std::vector<long>>();
  grid.dimension = node.value("dimension", 0L);
  grid.count = node.value("count", 0L);
  grid.seed = node.value("seed", std::uint64_t{0});
  grid.centered = node.value("centered", false);
  grid.path = node.value("path", std::string());
  return grid;
}

}  // namespace

void OracleSpec::validate() const {
  static const std::set<std::string> kKinds = {"salt_1d", "salt_2d", "calcite", "dolomite",
                                               "external"};
  if (kKinds.find(kind) == kKinds.end()) {
    throw std::invalid_argument("unknown oracle kind: " + kind);
  }
  if (kind == "external") {
    if (command.empty()) throw std::invalid_argument("external oracle requires a command");
    if (!(timeout_seconds > 0.0)) {
      throw std::invalid_argument("oracle timeout must be positive");
    }
  }
  if ((kind == "calcite" || kind == "dolomite") && system_file.empty()) {
    throw std::invalid_argument(kind + " oracle requires a system_file");
  }
}

long OracleSpec::dimension() const {
  if (kind == "salt_1d") return 1;
  if (kind == "salt_2d") return 2;
  if (kind == "calcite" || kind == "dolomite") return 6;
  return -1;
}

std::string OracleSpec::identity() const {
  if (kind == "external") return "external:" + command;
  if (kind == "calcite" || kind == "dolomite") return kind + ":" + system_file;
  return kind;
}

void GridSpec::validate() const {
  if (type == "regular") {
    if (counts.empty()) throw std::invalid_argument("regular grid requires per-dimension counts");
  } else if (type == "lhs") {
    if (dimension < 1) throw std::invalid_argument("lhs grid requires dimension >= 1");
    if (count < 1) throw std::invalid_argument("lhs grid requires count >= 1");
  } else if (type == "csv") {
    if (path.empty()) throw std::invalid_argument("csv grid requires a path");
  } else {
    throw std::invalid_argument("unknown grid type: " + type);
  }
}

sampling::CandidateGrid GridSpec::build() const {
  validate();
  if (type == "regular") return sampling::regular_grid(counts);
  if (type == "lhs") return sampling::latin_hypercube(dimension, count, seed, centered);
  return sampling::grid_from_csv_file(path);
}

void MetricPolicy::validate() const {
  if (mode != "full" && mode != "subsample") {
    throw std::invalid_argument("unknown metric test-set mode: " + mode);
  }
  if (mode == "subsample" && count < 2) {
    throw std::invalid_argument("metric subsample needs at least two points");
  }
}

void ExperimentConfig::validate() const {
  oracle.validate();
  grid.validate();
  metrics.validate();
  optimizer.validate();
  if (replications < 1) throw std::invalid_argument("replication count must be >= 1");
  if (seeds) {
    if (static_cast<long>(seeds->size()) != replications) {
      throw std::invalid_argument("seed list length must equal the replication count");
    }
    std::set<std::uint64_t> unique(seeds->begin(), seeds->end());
    if (static_cast<long>(unique.size()) != replications) {
      throw std::invalid_argument("replication seeds must be pairwise distinct");
    }
  }
  if (t1 < 1) throw std::invalid_argument("t1 must be >= 1");
  if (budget < t1) throw std::invalid_argument("budget must be >= t1");
  if (refit_every < 1) throw std::invalid_argument("refit_every must be >= 1");
  if (snapshot_every < 1) throw std::invalid_argument("snapshot_every must be >= 1");
  for (const auto& criterion : criteria) criterion.validate();
}

std::vector<std::uint64_t> ExperimentConfig::replication_seeds() const {
  if (seeds) return *seeds;
  std::vector<std::uint64_t> out(static_cast<std::size_t>(replications));
  for (long i = 0; i < replications; ++i) out[i] = base_seed + static_cast<std::uint64_t>(i);
  return out;
}

ExperimentConfig ExperimentConfig::from_json(std::istream& in) {
  json doc;
  try {
    doc = json::parse(in);
  } catch (const std::exception& error) {
    throw std::runtime_error(std::string("experiment config: ") + error.what());
  }
  try {
    if (!doc.is_object()) {
      throw std::runtime_error("experiment config: document must be a JSON object");
    }
    if (doc.contains("schema_version") && doc["schema_version"].get<int>() != kSchemaVersion) {
      throw std::runtime_error("experiment config: unsupported schema_version " +
                               doc["schema_version"].dump());
    }
    ExperimentConfig config;
    config.oracle = oracle_from_json(doc.at("oracle"));
    config.grid = grid_from_json(doc.at("grid"));
    if (doc.contains("kernels")) {
      config.kernels.clear();
      for (const auto& name : doc["kernels"]) {
        config.kernels.push_back(kernels::family_from_name(name.get<std::string>()));
      }
    }
    config.replications = doc.value("replications", config.replications);
    config.base_seed = doc.value("base_seed", config.base_seed);
    if (doc.contains("seeds")) config.seeds = doc["seeds"].get<std::vector<std::uint64_t>>();
    config.t1 = doc.value("t1", config.t1);
    config.budget = doc.value("budget", config.budget);
    if (doc.contains("criteria")) {
      for (const auto& name : doc["criteria"]) {
        config.criteria.push_back(stopping::Criterion::parse(name.get<std::string>()));
      }
    }
    if (doc.contains("metrics")) {
      const json& node = doc["metrics"];
      config.metrics.mode = node.value("mode", config.metrics.mode);
      config.metrics.count = node.value("count", config.metrics.count);
      config.metrics.seed = node.value("seed", config.metrics.seed);
    }
    if (doc.contains("normalization")) {
      config.normalization = loop::normalization_from_name(doc["normalization"].get<std::string>());
    }
    config.refit_every = doc.value("refit_every", config.refit_every);
    config.snapshot_every = doc.value("snapshot_every", config.snapshot_every);
    if (doc.contains("optimizer")) {
      const json& node = doc["optimizer"];
      config.optimizer.lower_bound = node.value("lower_bound", config.optimizer.lower_bound);
      config.optimizer.upper_bound = node.value("upper_bound", config.optimizer.upper_bound);
      config.optimizer.restarts = node.value("restarts", config.optimizer.restarts);
      config.optimizer.max_iterations =
          node.value("max_iterations", config.optimizer.max_iterations);
      config.optimizer.gradient_tolerance =
          node.value("gradient_tolerance", config.optimizer.gradient_tolerance);
    }
    config.record_timing = doc.value("record_timing", config.record_timing);
    config.output_dir = doc.value("output_dir", config.output_dir);
    config.validate();
    return config;
  } catch (const json::exception& error) {
    throw std::runtime_error(std::string("experiment config: ") + error.what());
  }
}

ExperimentConfig ExperimentConfig::from_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open experiment config: " + path);
  try {
    return from_json(in);
  } catch (const std::exception& error) {
    throw std::runtime_error(path + ": " + error.what());
  }
}

std::string ExperimentConfig::to_json() const {
  json doc;
  doc["schema_version"] = kSchemaVersion;
  doc["oracle"] = oracle_to_json(oracle);
  doc["grid"] = grid_to_json(grid);
  json kernel_names = json::array();
  for (const auto family : kernels) kernel_names.push_back(kernels::family_name(family));
  doc["kernels"] = kernel_names;
  doc["replications"] = replications;
  if (seeds) {
    doc["seeds"] = *seeds;
  } else {
    doc["base_seed"] = base_seed;
  }
  doc["t1"] = t1;
  doc["budget"] = budget;
  json criterion_names = json::array();
  for (const auto& criterion : criteria) criterion_names.push_back(criterion.name());
  doc["criteria"] = criterion_names;
  json metric_node;
  metric_node["mode"] = metrics.mode;
  if (metrics.mode == "subsample") {
    metric_node["count"] = metrics.count;
    metric_node["seed"] = metrics.seed;
  }
  doc["metrics"] = metric_node;
  doc["normalization"] = loop::normalization_name(normalization);
  doc["refit_every"] = refit_every;
  doc["snapshot_every"] = snapshot_every;
  json optimizer_node;
  optimizer_node["lower_bound"] = optimizer.lower_bound;
  optimizer_node["upper_bound"] = optimizer.upper_bound;
  optimizer_node["restarts"] = optimizer.restarts;
  optimizer_node["max_iterations"] = optimizer.max_iterations;
  optimizer_node["gradient_tolerance"] = optimizer.gradient_tolerance;
  doc["optimizer"] = optimizer_node;
  doc["record_timing"] = record_timing;
  doc["output_dir"] = output_dir;
  return doc.dump(2) + "\n";
}

loop::Oracle make_oracle(const OracleSpec& spec) {
  spec.validate();
  if (spec.kind == "salt_1d") return chem::salt_oracle_1d();
  if (spec.kind == "salt_2d") return chem::salt_oracle_2d();
  if (spec.kind == "calcite" || spec.kind == "dolomite") {
    chem::ChemicalSystem system = chem::ChemicalSystem::from_json_file(spec.system_file);
    return spec.kind == "calcite" ? chem::calcite_oracle(system) : chem::dolomite_oracle(system);
  }
  oracle::ExternalOracleConfig config;
  config.command = spec.command;
  config.timeout_seconds = spec.timeout_seconds;
  config.cache = spec.cache;
  return oracle::external_oracle(config);
}

std::vector<CriterionReplay> replay_stopping(const trace::RunTrace& trace,
                                             const std::vector<stopping::Criterion>& criteria) {
  const stopping::VarianceHistory history = trace.variance_history();
  if (history.empty()) throw std::runtime_error("stopping replay: trace has no fitted records");
  std::vector<CriterionReplay> out;
  out.reserve(criteria.size());
  for (const auto& criterion : criteria) {
    CriterionReplay replay;
    replay.criterion = criterion.name();
    const std::optional<long> fired_at = stopping::first_firing_iteration(criterion, history);
    replay.fired = fired_at.has_value();
    replay.t_star = replay.fired ? *fired_at : history.latest_t();
    const trace::Record* record = find_record(trace, replay.t_star);
    if (record == nullptr || !record->fit) {
      throw std::runtime_error("stopping replay: no fitted record at iteration " +
                               std::to_string(replay.t_star));
    }
    if (record->fit->metric_snapshot.empty()) {
      throw std::runtime_error("stopping replay: no metric snapshot at iteration " +
                               std::to_string(replay.t_star) + " (criterion " + replay.criterion +
                               ")");
    }
    replay.mae = metric_value(*record->fit, "mae");
    replay.rmse = metric_value(*record->fit, "rmse");
    replay.sup_norm = metric_value(*record->fit, "sup_norm");
    replay.variance = record->fit->variance;
    out.push_back(std::move(replay));
  }
  return out;
}

void ExperimentReport::validate() const {
  if (static_cast<long>(seeds.size()) != config.replications) {
    throw std::invalid_argument("report seeds do not match the replication count");
  }
  const std::size_t expected =
      config.kernels.size() * static_cast<std::size_t>(config.replications);
  if (runs.size() != expected) {
    throw std::invalid_argument("report run count does not match kernels x replications");
  }
  for (const auto& run : runs) run.trace.validate();
}

ExperimentReport run_experiment(const ExperimentConfig& config) {
  config.validate();
  ExperimentReport report;
  report.config = config;
  report.seeds = config.replication_seeds();

  const sampling::CandidateGrid grid = config.grid.build();
  const loop::Oracle oracle = make_oracle(config.oracle);

  const Eigen::MatrixXd test_points = metric_points(grid, config.metrics);
  report.ground_truth_requested = test_points.rows();
  const metrics::GroundTruth truth =
      load_or_compute_truth(config, oracle, test_points, report.ground_truth_failed);

  for (const auto family : config.kernels) {
    for (long i = 0; i < config.replications; ++i) {
      loop::LoopConfig run_config;
      run_config.family = family;
      run_config.t1 = config.t1;
      run_config.budget = config.budget;
      run_config.criterion = std::nullopt;
      run_config.seed = report.seeds[static_cast<std::size_t>(i)];
      run_config.optimizer = config.optimizer;
      run_config.normalization = config.normalization;
      run_config.refit_every = config.refit_every;
      run_config.snapshot_every = config.snapshot_every;
      run_config.record_timing = config.record_timing;

      loop::RunResult result = loop::run(oracle, grid, run_config, &truth);
      RunRecord run;
      run.kernel = kernels::family_name(family);
      run.replication = i;
      run.status = result.trace.terminal.status;
      run.trace = std::move(result.trace);
      if (run.status == "aborted") report.partial = true;
      report.runs.push_back(std::move(run));
    }
  }

  for (const auto& run : report.runs) {
    if (run.status == "aborted") continue;
    for (auto& replay : replay_stopping(run.trace, config.criteria)) {
      report.stopping.push_back({run.kernel, run.replication, std::move(replay)});
    }
  }

  report.validate();
  if (!config.output_dir.empty()) emit_report(report, config.output_dir);
  return report;
}

void write_metrics_csv(std::ostream& out, const ExperimentReport& report) {
  out << "kernel,replication,t,metric,value\n";
  for (const auto& run : report.runs) {
    for (const auto& record : run.trace.records) {
      if (!record.fit) continue;
      for (const auto& metric : record.fit->metric_snapshot) {
        out << run.kernel << ',' << run.replication << ',' << record.t << ',' << metric.name << ','
            << format_double(metric.value) << '\n';
      }
      out << run.kernel << ',' << run.replication << ',' << record.t << ",V,"
          << format_double(record.fit->variance) << '\n';
    }
  }

  // Aggregates over every replication that reports the (kernel, t, metric)
  // cell, in kernel order, then t, then first-seen metric order.
  std::vector<std::string> kernel_order;
  std::map<std::string, std::map<long, std::vector<std::pair<std::string, std::vector<double>>>>>
      cells;
  for (const auto& run : report.runs) {
    if (std::find(kernel_order.begin(), kernel_order.end(), run.kernel) == kernel_order.end()) {
      kernel_order.push_back(run.kernel);
    }
    auto& by_t = cells[run.kernel];
    for (const auto& record : run.trace.records) {
      if (!record.fit) continue;
      auto& row = by_t[record.t];
      auto push = [&row](const std::string& name, double value) {
        for (auto& entry : row) {
          if (entry.first == name) {
            entry.second.push_back(value);
            return;
          }
        }
        row.emplace_back(name, std::vector<double>{value});
      };
      for (const auto& metric : record.fit->metric_snapshot) push(metric.name, metric.value);
      push("V", record.fit->variance);
    }
  }
  for (const auto& kernel : kernel_order) {
    for (const auto& [t, row] : cells[kernel]) {
      for (const auto& [name, values] : row) {
        const double n = static_cast<double>(values.size());
        double mean = 0.0;
        for (const double v : values) mean += v;
        mean /= n;
        double variance = 0.0;
        for (const double v : values) variance += (v - mean) * (v - mean);
        const double std_dev = std::sqrt(variance / n);
        out << kernel << ",mean," << t << ',' << name << ',' << format_double(mean) << '\n';
        out << kernel << ",std," << t << ',' << name << ',' << format_double(std_dev) << '\n';
      }
    }
  }
}

void write_stopping_csv(std::ostream& out, const ExperimentReport& report) {
  out << "kernel,replication,criterion,t_star,fired,mae,rmse,sup_norm,V\n";
  for (const auto& row : report.stopping) {
    out << row.kernel << ',' << row.replication << ',' << row.replay.criterion << ','
        << row.replay.t_star << ',' << (row.replay.fired ? "fired" : "budget-capped") << ','
        << format_double(row.replay.mae) << ',' << format_double(row.replay.rmse) << ','
        << format_double(row.replay.sup_norm) << ',' << format_double(row.replay.variance)
        << '\n';
  }
}

void emit_report(const ExperimentReport& report, const std::string& directory) {
  const fs::path root(directory);
  fs::create_directories(root / "traces");
  fs::create_directories(root / "runs");

  {
    std::ofstream out = open_for_writing(root / "metrics.csv");
    write_metrics_csv(out, report);
  }
  {
    std::ofstream out = open_for_writing(root / "stopping_summary.csv");
    write_stopping_csv(out, report);
  }
  {
    json doc;
    doc["schema_version"] = kSchemaVersion;
    doc["config"] = json::parse(report.config.to_json());
    json result;
    result["partial"] = report.partial;
    result["seeds"] = report.seeds;
    result["ground_truth"] = {{"requested", report.ground_truth_requested},
                              {"failed", report.ground_truth_failed}};
    json runs = json::array();
    for (const auto& run : report.runs) {
      runs.push_back(
          {{"kernel", run.kernel}, {"replication", run.replication}, {"status", run.status}});
    }
    result["runs"] = runs;
    doc["result"] = result;
    std::ofstream out = open_for_writing(root / "config.json");
    out << doc.dump(2) << "\n";
  }

  for (const auto& run : report.runs) {
    char stem[64];
    std::snprintf(stem, sizeof(stem), "%s_rep%02ld", run.kernel.c_str(), run.replication);
    trace::write_jsonl_file((root / "traces" / (std::string(stem) + ".jsonl")).string(),
                            run.trace);
    std::ofstream out = open_for_writing(root / "runs" / (std::string(stem) + "_metrics.csv"));
    out << "t,mae,normalized_mae,rmse,sup_norm,normalized_sup_norm,V\n";
    for (const auto& record : run.trace.records) {
      if (!record.fit || record.fit->metric_snapshot.empty()) continue;
      out << record.t;
      for (const char* name :
           {"mae", "normalized_mae", "rmse", "sup_norm", "normalized_sup_norm"}) {
        out << ',' << format_double(metric_value(*record.fit, name));
      }
      out << ',' << format_double(record.fit->variance) << '\n';
    }
  }
}

}  // namespace gpal::experiments
