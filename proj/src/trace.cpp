#include "gpal/trace.hpp"

#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace gpal::trace {

using nlohmann::json;

namespace {

json vector_to_json(const Eigen::VectorXd& v) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

Eigen::VectorXd vector_from_json(const json& arr, const char* what) {
  if (!arr.is_array()) throw std::runtime_error(std::string("trace: ") + what + " must be an array");
  Eigen::VectorXd v(static_cast<Eigen::Index>(arr.size()));
  Eigen::Index i = 0;
  for (const auto& x : arr) v[i++] = x.get<double>();
  return v;
}

json header_to_json(const Header& h) {
  json j{{"record", "header"},
         {"schema_version", h.schema_version},
         {"kernel", h.kernel},
         {"grid", h.grid},
         {"grid_size", h.grid_size},
         {"dimension", h.dimension},
         {"t1", h.t1},
         {"budget", h.budget},
         {"seed", h.seed},
         {"normalization", h.normalization},
         {"record_timing", h.record_timing}};
  if (!h.criterion.empty()) j["criterion"] = h.criterion;
  return j;
}

Header header_from_json(const json& j) {
  Header h;
  h.schema_version = j.at("schema_version").get<int>();
  if (h.schema_version != kSchemaVersion) {
    throw std::runtime_error("trace: unsupported schema_version " +
                             std::to_string(h.schema_version) + ", expected " +
                             std::to_string(kSchemaVersion));
  }
  h.kernel = j.at("kernel").get<std::string>();
  h.grid = j.at("grid").get<std::string>();
  h.grid_size = j.at("grid_size").get<long>();
  h.dimension = j.at("dimension").get<long>();
  h.t1 = j.at("t1").get<long>();
  h.budget = j.at("budget").get<long>();
  h.seed = j.at("seed").get<std::uint64_t>();
  h.normalization = j.at("normalization").get<std::string>();
  h.record_timing = j.at("record_timing").get<bool>();
  if (j.contains("criterion")) h.criterion = j.at("criterion").get<std::string>();
  return h;
}

json record_to_json(const Record& r) {
  json j{{"record", "observation"},
         {"t", r.t},
         {"grid_index", r.grid_index},
         {"point", vector_to_json(r.point)},
         {"value", r.value}};
  if (r.fit) {
    j["lengthscales"] = vector_to_json(r.fit->lengthscales);
    j["variance"] = r.fit->variance;
    j["lml"] = r.fit->lml;
    j["refit"] = r.fit->refit;
    if (!r.fit->metric_snapshot.empty()) {
      json m = json::object();
      for (const auto& mv : r.fit->metric_snapshot) m[mv.name] = mv.value;
      j["metrics"] = m;
    }
  }
  if (r.wall_time) j["wall_time"] = *r.wall_time;
  return j;
}

Record record_from_json(const json& j) {
  Record r;
  r.t = j.at("t").get<long>();
  r.grid_index = j.at("grid_index").get<long>();
  r.point = vector_from_json(j.at("point"), "point");
  r.value = j.at("value").get<double>();
  if (j.contains("variance")) {
    FitInfo fit;
    fit.lengthscales = vector_from_json(j.at("lengthscales"), "lengthscales");
    fit.variance = j.at("variance").get<double>();
    fit.lml = j.at("lml").get<double>();
    fit.refit = j.at("refit").get<bool>();
    if (j.contains("metrics")) {
      for (const auto& [name, value] : j.at("metrics").items()) {
        fit.metric_snapshot.push_back({name, value.get<double>()});
      }
    }
    r.fit = std::move(fit);
  }
  if (j.contains("wall_time")) r.wall_time = j.at("wall_time").get<double>();
  return r;
}

json terminal_to_json(const Terminal& t) {
  json j{{"record", "terminal"}, {"status", t.status}, {"stopped_t", t.stopped_t}};
  if (!t.criterion.empty()) j["criterion"] = t.criterion;
  if (!t.message.empty()) j["message"] = t.message;
  return j;
}

Terminal terminal_from_json(const json& j) {
  Terminal t;
  t.status = j.at("status").get<std::string>();
  t.stopped_t = j.at("stopped_t").get<long>();
  if (j.contains("criterion")) t.criterion = j.at("criterion").get<std::string>();
  if (j.contains("message")) t.message = j.at("message").get<std::string>();
  return t;
}

}  // namespace

void RunTrace::validate() const {
  bool fit_seen = false;
  long prev_t = 0;
  for (const auto& r : records) {
    if (r.t <= prev_t) {
      throw std::runtime_error("RunTrace: record iterations must be strictly increasing (t=" +
                               std::to_string(r.t) + " after t=" + std::to_string(prev_t) + ")");
    }
    prev_t = r.t;
    if (r.fit) {
      if (!(r.fit->variance >= 0.0)) {
        throw std::runtime_error("RunTrace: negative variance at t=" + std::to_string(r.t));
      }
      fit_seen = true;
    } else if (fit_seen) {
      throw std::runtime_error("RunTrace: record t=" + std::to_string(r.t) +
                               " lacks fit data after earlier fitted records");
    }
  }
  if (terminal.stopped_t != (records.empty() ? 0 : records.back().t)) {
    throw std::runtime_error("RunTrace: terminal stopped_t does not match the last record");
  }
}

stopping::VarianceHistory RunTrace::variance_history() const {
  stopping::VarianceHistory h;
  for (const auto& r : records) {
    if (!r.fit) continue;
    if (h.empty()) h.first_t = r.t;
    h.append(r.fit->variance);
  }
  return h;
}

void write_jsonl(std::ostream& out, const RunTrace& trace) {
  out << header_to_json(trace.header).dump() << "\n";
  for (const auto& r : trace.records) out << record_to_json(r).dump() << "\n";
  out << terminal_to_json(trace.terminal).dump() << "\n";
}

RunTrace read_jsonl(std::istream& in) {
  RunTrace trace;
  std::string line;
  bool have_header = false, have_terminal = false;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw std::runtime_error("trace: line " + std::to_string(line_no) + ": " + e.what());
    }
    const auto kind = j.at("record").get<std::string>();
    if (have_terminal) {
      throw std::runtime_error("trace: line " + std::to_string(line_no) +
                               ": content after terminal record");
    }
    if (kind == "header") {
      if (have_header) throw std::runtime_error("trace: duplicate header record");
      trace.header = header_from_json(j);
      have_header = true;
    } else if (!have_header) {
      throw std::runtime_error("trace: first record must be the header");
    } else if (kind == "observation") {
      trace.records.push_back(record_from_json(j));
    } else if (kind == "terminal") {
      trace.terminal = terminal_from_json(j);
      have_terminal = true;
    } else {
      throw std::runtime_error("trace: line " + std::to_string(line_no) +
                               ": unknown record kind '" + kind + "'");
    }
  }
  if (!have_header) throw std::runtime_error("trace: missing header record");
  if (!have_terminal) throw std::runtime_error("trace: missing terminal record");
  trace.validate();
  return trace;
}

void write_jsonl_file(const std::string& path, const RunTrace& trace) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("trace: cannot open " + path + " for writing");
  write_jsonl(out, trace);
  if (!out) throw std::runtime_error("trace: write failed for " + path);
}

RunTrace read_jsonl_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("trace: cannot open " + path);
  return read_jsonl(in);
}

void write_csv_summary(std::ostream& out, const RunTrace& trace) {
  const long d = trace.header.dimension;
  // Metric columns: union over records, in first-seen order.
  std::vector<std::string> metric_names;
  for (const auto& r : trace.records) {
    if (!r.fit) continue;
    for (const auto& mv : r.fit->metric_snapshot) {
      bool known = false;
      for (const auto& name : metric_names) known = known || name == mv.name;
      if (!known) metric_names.push_back(mv.name);
    }
  }

  out << "t,grid_index";
  for (long j = 0; j < d; ++j) out << ",x" << j;
  out << ",value,variance,lml,refit,wall_time";
  for (const auto& name : metric_names) out << "," << name;
  for (long j = 0; j < d; ++j) out << ",lengthscale" << j;
  out << "\n";

  out << std::setprecision(17);
  for (const auto& r : trace.records) {
    out << r.t << "," << r.grid_index;
    for (long j = 0; j < d; ++j) out << "," << r.point[j];
    out << "," << r.value << ",";
    if (r.fit) out << r.fit->variance;
    out << ",";
    if (r.fit) out << r.fit->lml;
    out << ",";
    if (r.fit) out << (r.fit->refit ? 1 : 0);
    out << ",";
    if (r.wall_time) out << *r.wall_time;
    for (const auto& name : metric_names) {
      out << ",";
      if (!r.fit) continue;
      for (const auto& mv : r.fit->metric_snapshot) {
        if (mv.name == name) {
          out << mv.value;
          break;
        }
      }
    }
    for (long j = 0; j < d; ++j) {
      out << ",";
      if (r.fit) out << r.fit->lengthscales[j];
    }
    out << "\n";
  }
}

void write_csv_summary_file(const std::string& path, const RunTrace& trace) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("trace: cannot open " + path + " for writing");
  write_csv_summary(out, trace);
  if (!out) throw std::runtime_error("trace: write failed for " + path);
}

}  // namespace gpal::trace
