#pragma once

#include <functional>
#include <span>
#include <vector>

#include "critsde/common.hpp"

namespace critsde {

// Trapezoid rule on a uniform grid with spacing h.
double trapezoid(std::span<const double> values, double h);

// (integral |f|^p dx)^{1/p} by the trapezoid rule; p >= 1.
double lp_norm(std::span<const double> values, double h, double p);

// Gauss-Legendre nodes/weights on [-1, 1] (Newton on the Legendre
// recurrence); results are cached per n.
struct GaussLegendre {
  std::vector<double> x, w;
};
const GaussLegendre& gauss_legendre(int n);

// Quadrature nodes for singular Duhamel integrals int_0^t phi(s) ds where
// phi ~ s^{-1/q} at the left end and up to (t-s)^{-1+1/q} at the right end.
// Two panels split at t/2 with substitutions s = t*w^4 (left) and
// t - s = t*v^m, m = max(4, 2*ceil(q)) (right) turn both endpoint
// singularities into C^1-or-better integrands for every critical q > 2;
// n_per_panel Gauss-Legendre nodes each.  Verified against exact Beta
// values in tests.
struct DuhamelRule {
  std::vector<double> s;    // nodes in (0, t]; right-panel nodes can round
                            // to t itself, use tau for the distance
  std::vector<double> tau;  // t - s computed in the substitution variable,
                            // exact where the subtraction would cancel
  std::vector<double> w;    // weights, sum ~ t
};
DuhamelRule duhamel_rule(double t, double q, int n_per_panel = 64);

// integral_0^T g(t) dt with an integrable (or divergent) singularity at the
// right endpoint: geometric panels toward T with GL16 on each, stopping at
// T - T*edge_frac.  Used by the membership divergence checks.
double edge_refined_integral(const std::function<double(double)>& g, double T,
                             double edge_frac, int n_panels = 60);

// Least-squares slope of log(y) against log(x); x, y > 0.
double loglog_slope(std::span<const double> x, std::span<const double> y);

}  // namespace critsde
