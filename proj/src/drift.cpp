#include "critsde/drift.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "critsde/quadrature.hpp"
#include "critsde/spaces.hpp"
#include "critsde/special.hpp"

namespace critsde {

namespace {

double grid_interp(const SpatialGrid& grid, const std::vector<double>& values,
                   double x) {
  if (x <= -grid.L || x >= grid.L) return 0.0;
  const double h = grid.h();
  const double u = (x + grid.L) / h;
  const auto i = static_cast<std::size_t>(u);
  if (i + 1 >= values.size()) return values.back();
  const double lam = u - static_cast<double>(i);
  return (1.0 - lam) * values[i] + lam * values[i + 1];
}

}  // namespace

double SpatialProfile::eval(double x) const {
  switch (kind) {
    case Kind::gaussian: {
      const double z = (x - center) / width;
      return amplitude * std::exp(-0.5 * z * z);
    }
    case Kind::indicator:
      return (std::abs(x - center) <= 0.5 * width) ? amplitude : 0.0;
    case Kind::grid:
      return grid_interp(grid, values, x);
  }
  throw DomainError("SpatialProfile: unknown kind");
}

double SpatialProfile::lp_norm(double p) const {
  if (!(p >= 1.0)) throw DomainError("SpatialProfile: p must be >= 1");
  switch (kind) {
    case Kind::gaussian:
      // (int |A e^{-z^2/(2w^2)}|^p dx)^{1/p} = |A| (2 pi w^2 / p)^{1/(2p)}
      return std::abs(amplitude) *
             std::pow(2.0 * kPi * width * width / p, 0.5 / p);
    case Kind::indicator:
      return std::abs(amplitude) * std::pow(width, 1.0 / p);
    case Kind::grid:
      return critsde::lp_norm(values, grid.h(), p);
  }
  throw DomainError("SpatialProfile: unknown kind");
}

double SpatialProfile::sup_norm() const {
  switch (kind) {
    case Kind::gaussian:
    case Kind::indicator:
      return std::abs(amplitude);
    case Kind::grid: {
      double m = 0.0;
      for (double v : values) m = std::max(m, std::abs(v));
      return m;
    }
  }
  throw DomainError("SpatialProfile: unknown kind");
}

void SpatialProfile::validate() const {
  if (!std::isfinite(amplitude) || !std::isfinite(center))
    throw DomainError("SpatialProfile: non-finite parameters");
  if (kind != Kind::grid && !(width > 0.0))
    throw DomainError("SpatialProfile: width must be positive");
  if (kind == Kind::grid) {
    grid.validate();
    if (values.size() != grid.n_points)
      throw DomainError("SpatialProfile: grid/value size mismatch");
    if (!all_finite(values))
      throw DomainError("SpatialProfile: non-finite grid values");
  }
}

SpatialProfile gaussian_density_profile(double sd, double center) {
  if (!(sd > 0.0)) throw DomainError("gaussian_density_profile: sd <= 0");
  SpatialProfile p;
  p.kind = SpatialProfile::Kind::gaussian;
  p.width = sd;
  p.center = center;
  p.amplitude = 1.0 / (sd * std::sqrt(2.0 * kPi));
  return p;
}

void TimeSingularity::validate() const {
  if (!(horizon > 0.0)) throw DomainError("TimeSingularity: horizon <= 0");
  if (kind == Kind::reversed_example && !(q > 2.0))
    throw DomainError("TimeSingularity: reversed_example needs q > 2");
  if (kind == Kind::reversed_power && !(beta >= 0.0))
    throw DomainError("TimeSingularity: negative power exponent");
}

double TimeSingularity::forward(double t) const {
  if (kind == Kind::constant) return 1.0;
  if (!(t < horizon))
    throw DomainError("TimeSingularity: evaluation at or past the horizon");
  return reversed(horizon - t);
}

double TimeSingularity::reversed(double s) const {
  switch (kind) {
    case Kind::constant:
      return 1.0;
    case Kind::reversed_example: {
      if (!(s > 0.0)) throw DomainError("TimeSingularity: s must be positive");
      // s/(2T) <= 1/2, so the log is bounded away from zero.
      return std::pow(s, -1.0 / q) / std::abs(std::log(s / (2.0 * horizon)));
    }
    case Kind::reversed_power: {
      if (!(s > 0.0)) throw DomainError("TimeSingularity: s must be positive");
      return std::pow(s, -beta);
    }
  }
  throw DomainError("TimeSingularity: unknown kind");
}

double TimeSingularity::reversed_weighted_sup(double q_weight) const {
  validate();
  if (!(q_weight > 0.0)) throw DomainError("TimeSingularity: q_weight <= 0");
  const double T = horizon;
  switch (kind) {
    case Kind::constant:
      return std::pow(T, 1.0 / q_weight);
    case Kind::reversed_example: {
      const double a = 1.0 / q_weight - 1.0 / q;
      if (a < 0.0) return std::numeric_limits<double>::infinity();
      // s^a / log(2T/s) is increasing on (0, T]; the sup sits at s = T.
      return std::pow(T, a) / std::log(2.0);
    }
    case Kind::reversed_power: {
      const double a = 1.0 / q_weight - beta;
      if (a < 0.0) return std::numeric_limits<double>::infinity();
      return std::pow(T, a);
    }
  }
  throw DomainError("TimeSingularity: unknown kind");
}

void DriftB1::validate() const {
  time.validate();
  profile.validate();
  const double norm = profile.lp_norm(2.0);
  if (!std::isfinite(norm))
    throw DomainError("DriftB1: profile has infinite norm");
}

double DriftB1::reversed_weighted_norm(const ExponentPair& exps) const {
  exps.validate();
  return time.reversed_weighted_sup(exps.q) * profile.lp_norm(exps.p);
}

double DriftB2::eval(double x) const {
  switch (kind) {
    case Kind::zero:
      return 0.0;
    case Kind::constant:
      return value;
    case Kind::linear:
      return value + slope * x;
    case Kind::gauss_bump: {
      const double z = (x - center) / width;
      return amplitude * std::exp(-0.5 * z * z);
    }
    case Kind::grid:
      return grid_interp(grid, values, x);
  }
  throw DomainError("DriftB2: unknown kind");
}

double DriftB2::sup_norm(double lo, double hi) const {
  if (!(lo < hi)) throw DomainError("DriftB2: empty window");
  switch (kind) {
    case Kind::zero:
      return 0.0;
    case Kind::constant:
      return std::abs(value);
    case Kind::linear:
      return std::max(std::abs(value + slope * lo), std::abs(value + slope * hi));
    case Kind::gauss_bump: {
      // |bump| peaks at the center when it lies inside the window.
      if (center >= lo && center <= hi) return std::abs(amplitude);
      return std::max(std::abs(eval(lo)), std::abs(eval(hi)));
    }
    case Kind::grid: {
      double m = 0.0;
      for (std::size_t i = 0; i < values.size(); ++i) {
        const double x = grid.x(i);
        if (x >= lo && x <= hi) m = std::max(m, std::abs(values[i]));
      }
      return m;
    }
  }
  throw DomainError("DriftB2: unknown kind");
}

void DriftB2::validate() const {
  if (!std::isfinite(value) || !std::isfinite(slope) ||
      !std::isfinite(amplitude) || !std::isfinite(center))
    throw DomainError("DriftB2: non-finite parameters");
  if (kind == Kind::gauss_bump && !(width > 0.0))
    throw DomainError("DriftB2: bump width must be positive");
  if (kind == Kind::grid) {
    grid.validate();
    if (values.size() != grid.n_points)
      throw DomainError("DriftB2: grid/value size mismatch");
    if (!all_finite(values)) throw DomainError("DriftB2: non-finite values");
  }
}

double DriftSpec::eval(double t, double x) const {
  double v = b2.eval(x);
  if (b1) v += b1->eval(t, x);
  return v;
}

void DriftSpec::validate() const {
  if (!(horizon > 0.0)) throw DomainError("DriftSpec: horizon <= 0");
  b2.validate();
  if (b1) {
    b1->validate();
    if (std::abs(b1->time.horizon - horizon) > 1e-12 * horizon)
      throw DomainError("DriftSpec: b1 horizon mismatch");
  }
}

DriftSpec build_example_drift(const SpatialProfile& base,
                              const ExponentPair& exps) {
  exps.require_critical();
  base.validate();
  if (!std::isfinite(base.lp_norm(exps.p)))
    throw DomainError("build_example_drift: profile has infinite norm");
  DriftSpec spec;
  spec.horizon = exps.T;
  DriftB1 b1;
  b1.time.kind = TimeSingularity::Kind::reversed_example;
  b1.time.horizon = exps.T;
  b1.time.q = exps.q;
  b1.profile = base;
  spec.b1 = b1;
  return spec;
}

DriftSpec mollify_drift(const DriftSpec& drift, int n, const SpatialGrid& grid) {
  if (!drift.b1)
    throw DomainError("mollify_drift: no singular component to mollify");
  drift.validate();
  const MollifierSpec moll = build_mollifier(n, grid.h());
  std::vector<double> sampled(grid.n_points);
  for (std::size_t i = 0; i < grid.n_points; ++i)
    sampled[i] = drift.b1->profile.eval(grid.x(i));
  DriftSpec out = drift;
  SpatialProfile smooth;
  smooth.kind = SpatialProfile::Kind::grid;
  smooth.grid = grid;
  smooth.values = mollify_slice(sampled, moll);
  out.b1->profile = smooth;
  return out;
}

SpaceTimeField sample_reversed_drift(const DriftB1& b1, const SpatialGrid& grid,
                                     const std::vector<double>& times) {
  b1.validate();
  SpaceTimeField f(times, b1.time.horizon, grid);
  for (std::size_t ti = 0; ti < times.size(); ++ti) {
    const double w = times[ti] > 0.0 ? b1.time.reversed(times[ti]) : 0.0;
    auto slice = f.slice(ti);
    for (std::size_t i = 0; i < grid.n_points; ++i)
      slice[i] = w * b1.profile.eval(grid.x(i));
  }
  f.validate();
  return f;
}

void ReversedDriftSliceFn::eval(double s, std::span<double> out) const {
  if (out.size() != grid_.n_points)
    throw DomainError("ReversedDriftSliceFn: output span size mismatch");
  const double w = b1_.time.reversed(s);
  for (std::size_t i = 0; i < grid_.n_points; ++i)
    out[i] = w * b1_.profile.eval(grid_.x(i));
}

}  // namespace critsde
