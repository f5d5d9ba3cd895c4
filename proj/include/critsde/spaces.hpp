#pragma once

#include <optional>
#include <vector>

#include "critsde/field.hpp"

namespace critsde {

// sup_t t^{1/q} ||f(t)||_{L^p} over the field's grid times (slice norms by
// trapezoid quadrature).  A grid time at exactly 0 contributes 0.
double weighted_norm(const SpaceTimeField& f, const ExponentPair& exps);

// Weighted slice profile t -> t^{1/q} ||f(t)||_{L^p} for each grid time.
std::vector<double> weighted_profile(const SpaceTimeField& f,
                                     const ExponentPair& exps);

struct SpaceMembership {
  double linf_q_norm = 0.0;           // sup_t t^{1/q}||f(t)||_p
  std::optional<double> cq_norm;      // equals linf_q_norm for sampled-
                                      // continuous fields (always set here)
  bool in_c0q = false;                // weighted limit at t->0 below tol
  double limit_at_zero = 0.0;         // t_min^{1/q} ||f(t_min)||_p
  double limit_trend = 0.0;           // weighted value ratio t_min vs ~4*t_min
  bool lq_member = true;              // grid-quadrature divergence check on
                                      //   int ||f(t)||_p^q dt
  std::vector<double> lq_refinements; // the integral at successive t_min
};

// Classify a sampled field against the weighted hierarchy.  The smallest
// grid time must be positive (the weighted limit is otherwise undefined).
// tol acts on the weighted limit; note that |log t|-damped profiles decay
// too slowly to pass tight tolerances at representable t_min, so callers
// classify those with an explicit tol on the scale of the field norm.
SpaceMembership classify_space(const SpaceTimeField& f,
                               const ExponentPair& exps, double tol = 1e-3);

// Time reversal (I_T f)(t) = f(T - t).  For a reflection-symmetric time grid
// the result lives on the same grid (exact value permutation).  Otherwise:
// with allow_reflected_grid the result is returned on the reflected grid
// {T - t_i} (still exact); without it, DomainError.
SpaceTimeField reverse_time(const SpaceTimeField& f,
                            bool allow_reflected_grid = false);

// Mollifier rho_n(x) = n * rho(n x), rho = c * exp(-1/(1-x^2)) on |x| < 1,
// sampled on the grid and normalized to exact unit discrete mass.
// Requires 1/n >= 2h (kernel must span at least a few cells).
struct MollifierSpec {
  int n = 1;
  double h = 0.0;
  std::vector<double> kern_half;  // rho_n(j*h), j = 0..K
  double raw_mass = 0.0;          // trapezoid mass before normalization
  double second_moment = 0.0;     // int y^2 rho_n(y) dy (discrete)
};
MollifierSpec build_mollifier(int n, double h);

// The continuum bump normalization c = 1 / int_{-1}^{1} exp(-1/(1-x^2)) dx.
double bump_normalizer();

// Slice-wise spatial convolution f(t, .) * rho_n (zero padding outside the
// truncated domain).  Preserves slice mass exactly; non-expansive in L^p.
SpaceTimeField mollify(const SpaceTimeField& f, int n);
std::vector<double> mollify_slice(std::span<const double> slice,
                                  const MollifierSpec& m);

// Weighted-norm mollification errors sup_t t^{1/q}||f_n(t)-f(t)||_p for each
// n in n_list, plus the fitted log-log decay slope (~ -2 for smooth data).
struct MollificationProfile {
  std::vector<int> n_list;
  std::vector<double> errors;
  double slope = 0.0;
};
MollificationProfile mollification_profile(const SpaceTimeField& f,
                                           const ExponentPair& exps,
                                           const std::vector<int>& n_list);

// Travelling-bump family on [0,1): slice k (active on t in [(k-1)/k,
// k/(k+1))) is a thin bump near x = k of width ~1/k^2 and unit L^2 norm.
// Realized grid-exactly: bump k occupies round(1/(k^2 h)) cells with
// amplitude 1/sqrt(width); each slice then has ||f(t)||_2 = 1 to machine
// precision.  Every slice norm is 1 yet no mollification scale tracks the
// thin tail bumps: sup_t ||f_n(t) - f(t)||_2^2 >= 1/4 - slack for every n.
// Grid requirements: h <= 1/(4 k_max^2), L >= k_max + 2.
SpaceTimeField counterexample_field(int k_max, double h, double L);

// max over k (reported per mollifier scale n) of sup_t ||f_n(t)-f(t)||_2^2
// for the counterexample field; evaluated slice-by-slice.
struct CounterexampleCheck {
  std::vector<int> n_list;
  std::vector<double> worst_sq_error;  // per n: max_k ||f_n - f||_2^2
  std::vector<int> worst_k;
};
CounterexampleCheck counterexample_check(const SpaceTimeField& f,
                                         const std::vector<int>& n_list);

}  // namespace critsde
