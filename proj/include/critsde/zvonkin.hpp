#pragma once

#include <cstddef>
#include <vector>

#include "critsde/drift.hpp"
#include "critsde/field.hpp"
#include "critsde/sde.hpp"

namespace critsde {

// Diffusion coefficient catalog.  Uniform ellipticity delta1 <= sigma <=
// delta2 on the working interval is validated where the tables are built.
struct SigmaSpec {
  enum class Kind { constant, affine, tanh_shift, grid };
  Kind kind = Kind::constant;
  double base = 1.0;    // constant value; affine/tanh_shift offset
  double slope = 0.0;   // affine: base + slope * x
  double center = 0.0;  // tanh_shift: base + tanh(x - center)
  SpatialGrid grid;     // Kind::grid only
  std::vector<double> values;

  double eval(double x) const;
  double deriv(double x) const;  // analytic; centered differences for grids
  // (min, max) of sigma scanned over [lo, hi].
  std::pair<double, double> ellipticity_on(double lo, double hi,
                                           std::size_t n_scan = 4097) const;
  void validate() const;
};

// Tables for Phi(x) = int_{lo}^{x} 1/sigma and its inverse Psi.  Phi comes
// from a cumulative trapezoid of 1/sigma; evaluation is cubic Hermite with
// the exact derivative 1/sigma at the nodes, and Psi is tabulated on its own
// uniform range grid by Newton inversion, so the round trip is limited only
// by interpolation error (far below the 1e-6 target at default resolution).
struct ZvonkinMap {
  double lo = 0.0, hi = 0.0;
  std::vector<double> x_nodes, phi, phi_prime;
  std::vector<double> y_nodes, psi, psi_prime;
  double delta1 = 0.0, delta2 = 0.0;  // ellipticity bounds on [lo, hi]

  bool contains(double x) const { return x >= lo && x <= hi; }
  bool contains_y(double y) const { return y >= phi.front() && y <= phi.back(); }
  double phi_at(double x) const;       // DomainError outside [lo, hi]
  double phi_prime_at(double x) const;
  double psi_at(double y) const;       // DomainError outside the range
  void validate() const;  // monotone tables + bi-Lipschitz sandwich per node pair
};

ZvonkinMap build_phi(const SigmaSpec& sigma, double lo, double hi,
                     std::size_t n_nodes = (std::size_t{1} << 14) + 1);

// Working interval centered on the start point: [x0 -+ 8 sqrt(T) delta2].
ZvonkinMap build_phi_around(const SigmaSpec& sigma, double x0, double T,
                            std::size_t n_nodes = (std::size_t{1} << 14) + 1);

// Drift of the transformed process Y = Phi(X):
//   (t, y) |-> b(t, Psi(y)) / sigma(Psi(y)) - sigma'(Psi(y)) / 2.
// Throws (flagging the path) when y leaves the tabulated range.
ScalarField2 transformed_drift(const DriftSpec& b, const SigmaSpec& sigma,
                               const ZvonkinMap& map);

// Reported (not asserted) bound on the reversed weighted norm of the
// singular part of the transformed drift: ||I_T b1||_w scaled by the
// ellipticity cost of the change of variables.
double transformed_singular_norm_bound(const DriftSpec& b,
                                       const ZvonkinMap& map,
                                       const ExponentPair& exps);

// Route A: X directly with multiplicative noise sigma(X).  Route B: Y with
// unit noise and the transformed drift from Y0 = Phi(x0), mapped back
// through Psi.  Independent seeds; law agreement is measured by the KS
// distance against a same-law noise floor (two independent route-A runs).
struct RouteComparison {
  PathEnsemble direct;
  PathEnsemble transformed;            // terminal already mapped through Psi
  std::vector<double> mapped_terminal; // clean Psi(Y_T) samples
  double ks = 0.0;
  double noise_floor = 0.0;
  double floor_ratio = 1.5;
  bool pass = false;  // ks <= floor_ratio * noise_floor
};
RouteComparison simulate_both_routes(const DriftSpec& b, const SigmaSpec& sigma,
                                     double x0, const StepSchedule& sched,
                                     const SimOptions& opt,
                                     double floor_ratio = 1.5);

}  // namespace critsde
