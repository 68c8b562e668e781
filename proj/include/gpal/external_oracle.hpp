#pragma once

#include <Eigen/Dense>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "gpal/active_loop.hpp"

namespace gpal::oracle {

struct ExternalOracleConfig {
  std::string command;            // launched once via /bin/sh -c
  double timeout_seconds = 60.0;  // per query
  bool cache = true;              // memoize values by exact point

  void validate() const;
};

/// Adapter around a line-delimited JSON subprocess protocol: one request
/// {"id": n, "x": [...]} per line on the child's stdin, one response
/// {"id": n, "y": v} or {"id": n, "error": "text"} per line on its stdout.
/// Queries are serialized; repeated points are served from the cache without
/// a round-trip. Any protocol failure (exit, malformed line, timeout) throws
/// and permanently poisons the adapter.
class ExternalOracle {
 public:
  explicit ExternalOracle(ExternalOracleConfig config);
  ~ExternalOracle();
  ExternalOracle(const ExternalOracle&) = delete;
  ExternalOracle& operator=(const ExternalOracle&) = delete;

  double operator()(const Eigen::VectorXd& x);

  /// Protocol round-trips actually performed (cache hits excluded).
  long queries_sent() const;

 private:
  void spawn();
  void write_line(const std::string& line);
  std::string read_line();
  [[noreturn]] void fail(const std::string& message);
  void shutdown() noexcept;

  ExternalOracleConfig config_;
  mutable std::mutex mutex_;
  std::map<std::vector<double>, double> cache_;
  std::string pending_;  // bytes read past the last newline
  long last_id_ = 0;
  long queries_ = 0;
  int pid_ = 0;
  int to_child_ = -1;
  int from_child_ = -1;
  bool poisoned_ = false;
};

/// Functor form for the active-learning loop; shares one adapter instance.
loop::Oracle external_oracle(ExternalOracleConfig config);

}  // namespace gpal::oracle
