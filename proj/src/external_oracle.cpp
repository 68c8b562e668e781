#include "gpal/external_oracle.hpp"

#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstdio>
#include <cstring>
#include <stdexcept>

#include "json.hpp"

namespace gpal::oracle {
namespace {

std::string build_request(long id, const Eigen::VectorXd& x) {
  std::string line = "{\"id\": " + std::to_string(id) + ", \"x\": [";
  char buffer[40];
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    std::snprintf(buffer, sizeof(buffer), "%.17g", x[j]);
    if (j > 0) line += ", ";
    line += buffer;
  }
  line += "]}\n";
  return line;
}

double parse_response(const std::string& line, long id) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception&) {
    throw std::runtime_error("malformed oracle response line: " + line);
  }
  if (!doc.is_object() || !doc.contains("id") || !doc["id"].is_number_integer()) {
    throw std::runtime_error("malformed oracle response line: " + line);
  }
  if (doc["id"].get<long>() != id) {
    throw std::runtime_error("oracle response id mismatch: " + line);
  }
  if (doc.contains("error")) {
    throw std::runtime_error("oracle reported an error: " + doc["error"].get<std::string>());
  }
  if (!doc.contains("y") || !doc["y"].is_number()) {
    throw std::runtime_error("malformed oracle response line: " + line);
  }
  return doc["y"].get<double>();
}

}  // namespace

void ExternalOracleConfig::validate() const {
  if (command.empty()) throw std::invalid_argument("external oracle command is empty");
  if (!(timeout_seconds > 0.0)) throw std::invalid_argument("oracle timeout must be positive");
}

ExternalOracle::ExternalOracle(ExternalOracleConfig config) : config_(std::move(config)) {
  config_.validate();
}

ExternalOracle::~ExternalOracle() { shutdown(); }

double ExternalOracle::operator()(const Eigen::VectorXd& x) {
  const std::lock_guard<std::mutex> lock(mutex_);
  const std::vector<double> key(x.data(), x.data() + x.size());
  if (config_.cache) {
    const auto hit = cache_.find(key);
    if (hit != cache_.end()) return hit->second;
  }
  if (poisoned_) throw std::runtime_error("external oracle already failed; not retrying");
  if (pid_ == 0) spawn();
  const long id = ++last_id_;
  ++queries_;
  write_line(build_request(id, x));
  const std::string line = read_line();
  double value = 0.0;
  try {
    value = parse_response(line, id);
  } catch (const std::exception&) {
    poisoned_ = true;
    throw;
  }
  if (config_.cache) cache_[key] = value;
  return value;
}

long ExternalOracle::queries_sent() const {
  const std::lock_guard<std::mutex> lock(mutex_);
  return queries_;
}

void ExternalOracle::spawn() {
  // A dead child must surface as an error, not kill the process.
  ::signal(SIGPIPE, SIG_IGN);
  int to_child[2];
  int from_child[2];
  if (::pipe(to_child) != 0) fail("cannot create oracle pipe");
  if (::pipe(from_child) != 0) {
    ::close(to_child[0]);
    ::close(to_child[1]);
    fail("cannot create oracle pipe");
  }
  const int pid = ::fork();
  if (pid < 0) {
    ::close(to_child[0]);
    ::close(to_child[1]);
    ::close(from_child[0]);
    ::close(from_child[1]);
    fail("cannot fork oracle process");
  }
  if (pid == 0) {
    ::dup2(to_child[0], STDIN_FILENO);
    ::dup2(from_child[1], STDOUT_FILENO);
    ::close(to_child[0]);
    ::close(to_child[1]);
    ::close(from_child[0]);
    ::close(from_child[1]);
    ::execl("/bin/sh", "sh", "-c", config_.command.c_str(), static_cast<char*>(nullptr));
    std::perror("external oracle exec failed");
    ::_exit(127);
  }
  ::close(to_child[0]);
  ::close(from_child[1]);
  pid_ = pid;
  to_child_ = to_child[1];
  from_child_ = from_child[0];
}

void ExternalOracle::write_line(const std::string& line) {
  std::size_t sent = 0;
  while (sent < line.size()) {
    const ssize_t n = ::write(to_child_, line.data() + sent, line.size() - sent);
    if (n > 0) {
      sent += static_cast<std::size_t>(n);
      continue;
    }
    if (n < 0 && errno == EINTR) continue;
    fail(std::string("cannot send oracle request (") + std::strerror(errno) + ")");
  }
}

std::string ExternalOracle::read_line() {
  const auto deadline = std::chrono::steady_clock::now() +
                        std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                            std::chrono::duration<double>(config_.timeout_seconds));
  while (true) {
    const std::size_t newline = pending_.find('\n');
    if (newline != std::string::npos) {
      std::string line = pending_.substr(0, newline);
      pending_.erase(0, newline + 1);
      if (!line.empty() && line.back() == '\r') line.pop_back();
      return line;
    }
    const auto remaining = deadline - std::chrono::steady_clock::now();
    const long remaining_ms =
        std::chrono::duration_cast<std::chrono::milliseconds>(remaining).count();
    if (remaining_ms <= 0) {
      fail("oracle response timed out after " + std::to_string(config_.timeout_seconds) +
           " seconds");
    }
    struct pollfd probe{};
    probe.fd = from_child_;
    probe.events = POLLIN;
    const int ready = ::poll(&probe, 1, static_cast<int>(std::min(remaining_ms, 1000L)));
    if (ready < 0) {
      if (errno == EINTR) continue;
      fail(std::string("cannot poll oracle response (") + std::strerror(errno) + ")");
    }
    if (ready == 0) continue;
    char chunk[4096];
    const ssize_t n = ::read(from_child_, chunk, sizeof(chunk));
    if (n > 0) {
      pending_.append(chunk, static_cast<std::size_t>(n));
      continue;
    }
    if (n < 0 && errno == EINTR) continue;
    fail(n == 0 ? "oracle process exited before responding"
                : std::string("cannot read oracle response (") + std::strerror(errno) + ")");
  }
}

void ExternalOracle::fail(const std::string& message) {
  poisoned_ = true;
  throw std::runtime_error("external oracle: " + message);
}

void ExternalOracle::shutdown() noexcept {
  if (to_child_ >= 0) {
    ::close(to_child_);  // EOF asks the child to exit
    to_child_ = -1;
  }
  if (from_child_ >= 0) {
    ::close(from_child_);
    from_child_ = -1;
  }
  if (pid_ > 0) {
    int status = 0;
    if (poisoned_) {  // protocol already broken; no graceful exit to wait for
      ::kill(pid_, SIGKILL);
      ::waitpid(pid_, &status, 0);
      pid_ = 0;
      return;
    }
    for (int attempt = 0; attempt < 40; ++attempt) {
      const int done = ::waitpid(pid_, &status, WNOHANG);
      if (done == pid_ || done < 0) {
        pid_ = 0;
        return;
      }
      struct timespec nap{0, 50 * 1000 * 1000};
      ::nanosleep(&nap, nullptr);
    }
    ::kill(pid_, SIGKILL);
    ::waitpid(pid_, &status, 0);
    pid_ = 0;
  }
}

loop::Oracle external_oracle(ExternalOracleConfig config) {
  auto adapter = std::make_shared<ExternalOracle>(std::move(config));
  return [adapter](const Eigen::VectorXd& x) { return (*adapter)(x); };
}

}  // namespace gpal::oracle
