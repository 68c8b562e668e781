#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace gpal::sampling {

// Finite candidate set in the unit cube.
struct CandidateGrid {
  Eigen::MatrixXd points;  // one point per row, coordinates in [0, 1]
  std::string provenance;  // e.g. "regular(1140)", "lhs(d=6,m=100000,seed=7)"

  Eigen::Index size() const { return points.rows(); }
  Eigen::Index dimension() const { return points.cols(); }
};

inline constexpr long kDefaultGridCap = 10'000'000;

/// Cartesian product of per-dimension equispaced coordinates including both
/// endpoints 0 and 1. Row ordering: the first dimension varies slowest, the
/// last fastest. Errors when the total point count exceeds `cap`.
CandidateGrid regular_grid(const std::vector<long>& counts, long cap = kDefaultGridCap);

/// Latin hypercube: exactly one point per axis-aligned slab [j/m, (j+1)/m)
/// in every dimension. Placement uniform within the slab, or at the slab
/// center when `centered`. Deterministic given the seed.
CandidateGrid latin_hypercube(long dimension, long count, std::uint64_t seed,
                              bool centered = false);

// Axis-aligned physical box, one (lo, hi) pair per dimension.
struct BoundsMap {
  Eigen::MatrixXd bounds;  // d x 2

  Eigen::Index dimension() const { return bounds.rows(); }
  void validate() const;

  /// Physical -> unit cube. Errors when x lies outside the box.
  Eigen::VectorXd to_unit(const Eigen::VectorXd& x) const;
  /// Unit cube -> physical. Errors when u lies outside [0, 1]^d.
  Eigen::VectorXd from_unit(const Eigen::VectorXd& u) const;
  Eigen::MatrixXd from_unit_rows(const Eigen::MatrixXd& U) const;
};

/// CSV export: header of dimension names (default x0..x{d-1}), one point per
/// row, 17 significant digits.
void write_grid_csv(std::ostream& out, const Eigen::MatrixXd& points,
                    const std::vector<std::string>& names = {});
struct GridCsv {
  Eigen::MatrixXd points;
  std::vector<std::string> names;
};
GridCsv read_grid_csv(std::istream& in);

CandidateGrid grid_from_csv_file(const std::string& path);
void write_grid_csv_file(const std::string& path, const Eigen::MatrixXd& points,
                         const std::vector<std::string>& names = {});

}  // namespace gpal::sampling
