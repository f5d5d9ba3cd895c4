#include "critsde/field.hpp"

#include <algorithm>
#include <cmath>

namespace critsde {

std::size_t SpatialGrid::index_of(double xv) const {
  const double fi = (xv + L) / h();
  const auto i = static_cast<std::ptrdiff_t>(std::llround(fi));
  if (i < 0) return 0;
  if (i >= static_cast<std::ptrdiff_t>(n_points)) return n_points - 1;
  return static_cast<std::size_t>(i);
}

SpaceTimeField::SpaceTimeField(std::vector<double> ts, double horizon,
                               SpatialGrid g)
    : times(std::move(ts)), T(horizon), grid(g) {
  grid.validate();
  values.assign(times.size() * grid.n_points, 0.0);
  validate();
}

void SpaceTimeField::validate() const {
  grid.validate();
  if (!(T > 0.0)) throw DomainError("SpaceTimeField: T > 0 required");
  if (times.empty()) throw DomainError("SpaceTimeField: empty time grid");
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (times[i] < 0.0 || times[i] > T * (1.0 + 1e-12))
      throw DomainError("SpaceTimeField: times must lie in [0, T]");
    if (i > 0 && !(times[i] > times[i - 1]))
      throw DomainError("SpaceTimeField: times must be strictly increasing");
  }
  if (values.size() != times.size() * grid.n_points)
    throw DataError("SpaceTimeField: value array size mismatch");
  if (!all_finite(values))
    throw DataError("SpaceTimeField: non-finite values");
}

std::vector<double> linspace(double a, double b, std::size_t n) {
  if (n < 2) throw DomainError("linspace: need n >= 2");
  std::vector<double> out(n);
  const double step = (b - a) / static_cast<double>(n - 1);
  for (std::size_t i = 0; i < n; ++i) out[i] = a + step * static_cast<double>(i);
  out.back() = b;
  return out;
}

}  // namespace critsde
