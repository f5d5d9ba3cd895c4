#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "critsde/common.hpp"
#include "critsde/field.hpp"
#include "critsde/mild.hpp"

namespace critsde {

// Spatial factor of a drift: a small catalog of closed-form profiles plus a
// gridded fallback (linear interpolation, zero outside the grid).
struct SpatialProfile {
  enum class Kind { gaussian, indicator, grid };
  Kind kind = Kind::gaussian;
  double amplitude = 1.0;
  double center = 0.0;
  double width = 1.0;  // gaussian: standard deviation; indicator: full width
  SpatialGrid grid;    // Kind::grid only
  std::vector<double> values;

  double eval(double x) const;
  // Exact L^p norm for gaussian/indicator, trapezoid quadrature for grids.
  double lp_norm(double p) const;
  double sup_norm() const;
  void validate() const;
};

// amplitude chosen so the profile integrates to one (a density bump).
SpatialProfile gaussian_density_profile(double sd = 1.0, double center = 0.0);

// Scalar time factor w(t) of a separable drift b1(t,x) = w(t) phi(x), given
// in forward time on [0, T).  The reversed kinds blow up at t -> T; their
// time reversal s |-> w(T - s) is what the weighted norms see.
struct TimeSingularity {
  enum class Kind {
    constant,          // w = 1
    reversed_example,  // w(t) = (T-t)^{-1/q} |log((T-t)/(2T))|^{-1}
    reversed_power,    // w(t) = (T-t)^{-beta}
  };
  Kind kind = Kind::constant;
  double horizon = 1.0;
  double q = 4.0;      // reversed_example
  double beta = 0.25;  // reversed_power

  bool singular() const { return kind != Kind::constant; }
  double forward(double t) const;   // throws DomainError at t >= horizon when singular
  double reversed(double s) const;  // w(T - s), s in (0, T]
  // sup_{0 < s <= T} s^{1/q_weight} w(T - s); +infinity when the reversed
  // factor escapes the weighted space.
  double reversed_weighted_sup(double q_weight) const;
  void validate() const;
};

// Singular drift component: separable b1(t,x) = w(t) phi(x).
struct DriftB1 {
  TimeSingularity time;
  SpatialProfile profile;

  double eval(double t, double x) const {
    return time.forward(t) * profile.eval(x);
  }
  // || s^{1/q} b1(T - s, .) ||_{sup_s, L^p}: exact by separability.
  double reversed_weighted_norm(const ExponentPair& exps) const;
  void validate() const;
};

// Bounded measurable component.  The linear entry is unbounded globally and
// exists for classical benchmark drifts (Ornstein-Uhlenbeck); catalog users
// that require boundedness must pick one of the others.
struct DriftB2 {
  enum class Kind { zero, constant, linear, gauss_bump, grid };
  Kind kind = Kind::zero;
  double value = 0.0;      // constant; linear: value + slope * x
  double slope = 0.0;
  double center = 0.0;     // gauss_bump
  double width = 1.0;
  double amplitude = 0.0;
  SpatialGrid grid;
  std::vector<double> values;

  bool bounded() const { return kind != Kind::linear || slope == 0.0; }
  double eval(double x) const;
  double sup_norm(double lo, double hi) const;
  void validate() const;
};

// Full drift b(t,x) = b1(t,x) + b2(x).
struct DriftSpec {
  std::optional<DriftB1> b1;
  DriftB2 b2;
  double horizon = 1.0;

  bool has_singular_part() const { return b1.has_value(); }
  double eval(double t, double x) const;
  void validate() const;
};

// The critical-drift example at exponents (p, q): time factor
// (T-t)^{-1/q} |log((T-t)/(2T))|^{-1} against a fixed spatial profile.  Its
// time reversal has weighted norm ||phi||_p / log 2, lies in the
// vanishing-at-zero weighted class, and is exactly L^q-in-time integrable
// (any higher power diverges).
DriftSpec build_example_drift(const SpatialProfile& base,
                              const ExponentPair& exps);

// Replace the b1 profile by its mollification at scale 1/n, realized on
// `grid`.  The time factor is untouched, so reversed weighted error norms
// factor through ||phi_n - phi||_p.
DriftSpec mollify_drift(const DriftSpec& drift, int n, const SpatialGrid& grid);

// Sample the time-reversed singular part s |-> b1(T - s, .) on a grid; the
// result feeds the membership classifier and norm quadrature.
SpaceTimeField sample_reversed_drift(const DriftB1& b1, const SpatialGrid& grid,
                                     const std::vector<double>& times);

// Analytic time slices of the reversed singular part for the transform-PDE
// solver: eval(s)[i] = w(T - s) phi(x_i) with no interpolation error.
class ReversedDriftSliceFn : public TimeSliceFn {
 public:
  ReversedDriftSliceFn(const DriftB1& b1, const SpatialGrid& grid)
      : b1_(b1), grid_(grid) {
    b1_.validate();
  }
  void eval(double s, std::span<double> out) const override;

 private:
  DriftB1 b1_;
  SpatialGrid grid_;
};

}  // namespace critsde
