#include "gpal/sampling.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "gpal/rng.hpp"

namespace gpal::sampling {

CandidateGrid regular_grid(const std::vector<long>& counts, long cap) {
  if (counts.empty()) throw std::invalid_argument("regular_grid: counts must be non-empty");
  long total = 1;
  for (std::size_t j = 0; j < counts.size(); ++j) {
    if (counts[j] < 2) {
      throw std::invalid_argument("regular_grid: count for dimension " + std::to_string(j) +
                                  " must be at least 2, got " + std::to_string(counts[j]));
    }
    if (total > cap / counts[j]) {
      throw std::invalid_argument("regular_grid: total point count exceeds cap of " +
                                  std::to_string(cap));
    }
    total *= counts[j];
  }

  const auto d = static_cast<Eigen::Index>(counts.size());
  std::vector<std::vector<double>> axes(counts.size());
  for (std::size_t j = 0; j < counts.size(); ++j) {
    axes[j].resize(static_cast<std::size_t>(counts[j]));
    for (long i = 0; i < counts[j]; ++i) {
      axes[j][static_cast<std::size_t>(i)] =
          static_cast<double>(i) / static_cast<double>(counts[j] - 1);
    }
  }

  CandidateGrid grid;
  grid.points.resize(total, d);
  // Odometer walk, last dimension fastest.
  std::vector<long> idx(counts.size(), 0);
  for (long row = 0; row < total; ++row) {
    for (Eigen::Index j = 0; j < d; ++j) {
      grid.points(row, j) = axes[static_cast<std::size_t>(j)][static_cast<std::size_t>(idx[static_cast<std::size_t>(j)])];
    }
    for (long j = static_cast<long>(counts.size()) - 1; j >= 0; --j) {
      if (++idx[static_cast<std::size_t>(j)] < counts[static_cast<std::size_t>(j)]) break;
      idx[static_cast<std::size_t>(j)] = 0;
    }
  }

  std::ostringstream tag;
  tag << "regular(";
  for (std::size_t j = 0; j < counts.size(); ++j) {
    if (j) tag << "x";
    tag << counts[j];
  }
  tag << ")";
  grid.provenance = tag.str();
  return grid;
}

CandidateGrid latin_hypercube(long dimension, long count, std::uint64_t seed, bool centered) {
  if (dimension < 1) throw std::invalid_argument("latin_hypercube: dimension must be positive");
  if (count < 1) throw std::invalid_argument("latin_hypercube: count must be positive");

  rng::Engine engine(seed);
  CandidateGrid grid;
  grid.points.resize(count, dimension);
  std::vector<long> slab(static_cast<std::size_t>(count));
  const double m = static_cast<double>(count);
  for (long j = 0; j < dimension; ++j) {
    std::iota(slab.begin(), slab.end(), 0L);
    rng::shuffle(slab, engine);
    for (long i = 0; i < count; ++i) {
      const double offset = centered ? 0.5 : rng::uniform01(engine);
      grid.points(i, j) = (static_cast<double>(slab[static_cast<std::size_t>(i)]) + offset) / m;
    }
  }

  std::ostringstream tag;
  tag << "lhs(d=" << dimension << ",m=" << count << ",seed=" << seed
      << (centered ? ",centered" : "") << ")";
  grid.provenance = tag.str();
  return grid;
}

void BoundsMap::validate() const {
  if (bounds.rows() < 1 || bounds.cols() != 2) {
    throw std::invalid_argument("BoundsMap: bounds must be a d x 2 matrix with d >= 1");
  }
  for (Eigen::Index j = 0; j < bounds.rows(); ++j) {
    if (!std::isfinite(bounds(j, 0)) || !std::isfinite(bounds(j, 1)) ||
        !(bounds(j, 0) < bounds(j, 1))) {
      throw std::invalid_argument("BoundsMap: dimension " + std::to_string(j) +
                                  " needs finite lo < hi");
    }
  }
}

Eigen::VectorXd BoundsMap::to_unit(const Eigen::VectorXd& x) const {
  validate();
  if (x.size() != bounds.rows()) {
    throw std::invalid_argument("BoundsMap::to_unit: point dimension mismatch");
  }
  Eigen::VectorXd u(x.size());
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    const double lo = bounds(j, 0), hi = bounds(j, 1);
    if (!(x[j] >= lo && x[j] <= hi)) {
      throw std::invalid_argument("BoundsMap::to_unit: coordinate " + std::to_string(j) +
                                  " = " + std::to_string(x[j]) + " outside [" +
                                  std::to_string(lo) + ", " + std::to_string(hi) + "]");
    }
    u[j] = (x[j] - lo) / (hi - lo);
  }
  return u;
}

Eigen::VectorXd BoundsMap::from_unit(const Eigen::VectorXd& u) const {
  validate();
  if (u.size() != bounds.rows()) {
    throw std::invalid_argument("BoundsMap::from_unit: point dimension mismatch");
  }
  Eigen::VectorXd x(u.size());
  for (Eigen::Index j = 0; j < u.size(); ++j) {
    if (!(u[j] >= 0.0 && u[j] <= 1.0)) {
      throw std::invalid_argument("BoundsMap::from_unit: coordinate " + std::to_string(j) +
                                  " = " + std::to_string(u[j]) + " outside [0, 1]");
    }
    x[j] = bounds(j, 0) + u[j] * (bounds(j, 1) - bounds(j, 0));
  }
  return x;
}

Eigen::MatrixXd BoundsMap::from_unit_rows(const Eigen::MatrixXd& U) const {
  validate();
  if (U.cols() != bounds.rows()) {
    throw std::invalid_argument("BoundsMap::from_unit_rows: dimension mismatch");
  }
  Eigen::MatrixXd X(U.rows(), U.cols());
  for (Eigen::Index i = 0; i < U.rows(); ++i) {
    X.row(i) = from_unit(U.row(i).transpose()).transpose();
  }
  return X;
}

void write_grid_csv(std::ostream& out, const Eigen::MatrixXd& points,
                    const std::vector<std::string>& names) {
  if (!names.empty() && static_cast<Eigen::Index>(names.size()) != points.cols()) {
    throw std::invalid_argument("write_grid_csv: header name count mismatch");
  }
  for (Eigen::Index j = 0; j < points.cols(); ++j) {
    if (j) out << ",";
    if (names.empty()) {
      out << "x" << j;
    } else {
      out << names[static_cast<std::size_t>(j)];
    }
  }
  out << "\n";
  out << std::setprecision(17);
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    for (Eigen::Index j = 0; j < points.cols(); ++j) {
      if (j) out << ",";
      out << points(i, j);
    }
    out << "\n";
  }
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

}  // namespace

GridCsv read_grid_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("read_grid_csv: empty input");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  GridCsv result;
  result.names = split_csv_line(line);
  const auto d = static_cast<Eigen::Index>(result.names.size());
  if (d == 0) throw std::runtime_error("read_grid_csv: empty header");

  std::vector<double> values;
  long rows = 0;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (static_cast<Eigen::Index>(fields.size()) != d) {
      throw std::runtime_error("read_grid_csv: line " + std::to_string(line_no) + " has " +
                               std::to_string(fields.size()) + " fields, expected " +
                               std::to_string(d));
    }
    for (const auto& f : fields) {
      std::size_t pos = 0;
      double v = 0.0;
      try {
        v = std::stod(f, &pos);
      } catch (const std::exception&) {
        pos = 0;
      }
      if (pos != f.size() || pos == 0) {
        throw std::runtime_error("read_grid_csv: line " + std::to_string(line_no) +
                                 ": cannot parse '" + f + "' as a number");
      }
      values.push_back(v);
    }
    ++rows;
  }

  result.points.resize(rows, d);
  for (long i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) {
      result.points(i, j) = values[static_cast<std::size_t>(i * d + j)];
    }
  }
  return result;
}

CandidateGrid grid_from_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("grid_from_csv_file: cannot open " + path);
  auto csv = read_grid_csv(in);
  for (Eigen::Index i = 0; i < csv.points.rows(); ++i) {
    for (Eigen::Index j = 0; j < csv.points.cols(); ++j) {
      const double v = csv.points(i, j);
      if (!(v >= 0.0 && v <= 1.0)) {
        throw std::runtime_error("grid_from_csv_file: " + path + ": row " + std::to_string(i) +
                                 " coordinate " + std::to_string(j) + " = " + std::to_string(v) +
                                 " outside [0, 1]");
      }
    }
  }
  CandidateGrid grid;
  grid.points = std::move(csv.points);
  grid.provenance = "csv(" + path + ")";
  return grid;
}

void write_grid_csv_file(const std::string& path, const Eigen::MatrixXd& points,
                         const std::vector<std::string>& names) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_grid_csv_file: cannot open " + path);
  write_grid_csv(out, points, names);
  if (!out) throw std::runtime_error("write_grid_csv_file: write failed for " + path);
}

}  // namespace gpal::sampling
