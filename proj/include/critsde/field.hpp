#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "critsde/common.hpp"

namespace critsde {

// Uniform spatial grid on [-L, L] (one dimension).
struct SpatialGrid {
  double L = 12.0;
  std::size_t n_points = 1025;

  double h() const { return 2.0 * L / static_cast<double>(n_points - 1); }
  double x(std::size_t i) const { return -L + static_cast<double>(i) * h(); }
  // Nearest grid index for a coordinate (clamped to the grid).
  std::size_t index_of(double xv) const;
  void validate() const {
    if (!(L > 0.0) || n_points < 3)
      throw DomainError("SpatialGrid: need L > 0 and at least 3 points");
  }
  bool operator==(const SpatialGrid&) const = default;
};

// Scalar space-time field sampled on a time grid times[] (strictly increasing,
// inside [0, T]) and a uniform spatial grid.  Values are stored time-major:
// values[ti * n_points + xi].
struct SpaceTimeField {
  std::vector<double> times;
  double T = 1.0;
  SpatialGrid grid;
  std::vector<double> values;

  SpaceTimeField() = default;
  SpaceTimeField(std::vector<double> ts, double horizon, SpatialGrid g);

  std::size_t n_times() const { return times.size(); }
  std::size_t n_x() const { return grid.n_points; }

  double& at(std::size_t ti, std::size_t xi) {
    return values[ti * grid.n_points + xi];
  }
  double at(std::size_t ti, std::size_t xi) const {
    return values[ti * grid.n_points + xi];
  }
  std::span<double> slice(std::size_t ti) {
    return {values.data() + ti * grid.n_points, grid.n_points};
  }
  std::span<const double> slice(std::size_t ti) const {
    return {values.data() + ti * grid.n_points, grid.n_points};
  }

  // Throws DataError / DomainError when the invariants are broken
  // (non-finite values, unsorted times, size mismatch).
  void validate() const;
};

// Uniformly spaced time grid helper (first > 0 optional via t0).
std::vector<double> linspace(double a, double b, std::size_t n);

}  // namespace critsde
