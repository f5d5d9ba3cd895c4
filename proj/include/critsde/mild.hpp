#pragma once

#include <memory>
#include <span>
#include <vector>

#include "critsde/field.hpp"
#include "critsde/heat.hpp"

namespace critsde {

// A time-indexed family of spatial slices on a fixed solver grid: eval fills
// `out` (one value per grid point) with the slice at time s in (0, T].
struct TimeSliceFn {
  virtual ~TimeSliceFn() = default;
  virtual void eval(double s, std::span<double> out) const = 0;
};

// Evaluator over a sampled field.  Time interpolation acts on the weighted
// profile V(s) = s^{1/q} f(s) (linear between slices, constant before the
// first positive grid time), which keeps the s^{-1/q} envelope of weighted
// data exact at the nodes and bounded between them.  Spatial resampling is
// linear when the target grid differs.  Fields carrying a singular slice at
// small time should therefore start at a positive t_min.
class GriddedSliceFn : public TimeSliceFn {
 public:
  GriddedSliceFn(SpaceTimeField field, ExponentPair exps, SpatialGrid target);
  void eval(double s, std::span<double> out) const override;

 private:
  SpaceTimeField field_;
  ExponentPair exps_;
  SpatialGrid target_;
  bool same_grid_ = false;
};

struct SolverOptions {
  double tol = 1e-8;        // fixed-point residual in the W^{1,inf} grid norm
  int max_iter = 60;
  int gl_nodes = 64;        // Gauss-Legendre nodes per quadrature panel
  double coarsest_step_frac = 1.0 / 64.0;  // largest time step, as a fraction of T
  double step_ratio = 1.2;                 // geometric refinement toward t=0
  double t_floor_frac = 1e-9;              // smallest positive node, as frac of T
  bool strict = false;
};

// Geometric-toward-zero solver time grid: t=0, then T*t_floor_frac growing by
// step_ratio until the gaps reach T*coarsest_step_frac, then uniform to T.
std::vector<double> solver_time_grid(double T, const SolverOptions& opt = {});

struct MildSolution {
  ExponentPair exps;
  std::vector<double> times;  // solver grid, times[0] = 0
  SpatialGrid grid;
  std::vector<double> u, grad_u;  // time-major slices
  KernelConstants constants;
  double residual = 0.0;           // final fixed-point gap (W^{1,inf})
  int iterations = 0;
  double contraction_ratio = 0.0;  // measured successive-difference ratio
  double f_weighted_norm = 0.0;
  double g_weighted_norm = 0.0;
  double sup_u = 0.0, sup_grad = 0.0;

  std::span<const double> u_slice(std::size_t ti) const {
    return {u.data() + ti * grid.n_points, grid.n_points};
  }
  std::span<const double> grad_slice(std::size_t ti) const {
    return {grad_u.data() + ti * grid.n_points, grid.n_points};
  }
};

// Picard iteration for the mild (Duhamel) equation
//   u(t) = int_0^t K(t-s) * (g . grad u + f)(s) ds,   u(0) = 0,
// starting from u = 0, with the singular-endpoint quadrature of
// duhamel_rule and kernel convolutions per heat.hpp.  Contractive when
// c0 * sup_s s^{1/q}||g(s)||_p < 1; otherwise refuses (ConvergenceError)
// with the measured bound in the diagnostic.
MildSolution solve_mild(const TimeSliceFn& f, const TimeSliceFn* g,
                        const ExponentPair& exps, const SpatialGrid& grid,
                        const SolverOptions& opt = {});
MildSolution solve_mild(const SpaceTimeField& f, const SpaceTimeField* g,
                        const ExponentPair& exps,
                        const SolverOptions& opt = {});

// One application of the Duhamel right side at an arbitrary t in (0, T],
// using the converged gradient slices of `sol` for the g . grad u term.
struct MildSlices {
  std::vector<double> u, grad_u;
};
MildSlices eval_mild_at(const MildSolution& sol, const TimeSliceFn& f,
                        const TimeSliceFn* g, double t);

// A-priori W^{1,inf} bound check:
//   sup|grad u| <= c_grad ||f||_w / (1 - c0 ||g||_w)   and
//   max(sup|u|, sup|grad u|) <= c0 ||f||_w / (1 - c0 ||g||_w),
// each allowed multiplicative slack (default 5%).
struct GradientBoundReport {
  double sup_u = 0, sup_grad = 0, lhs_w1inf = 0;
  double f_norm = 0, g_norm = 0;
  double rhs_grad = 0, rhs_w1inf = 0;
  double slack = 0.05;
  bool pass = false;
};
GradientBoundReport check_gradient_bound(const MildSolution& sol,
                                         double slack = 0.05);

// Time-Hoelder modulus of the solution in W^{1,p}: fits the log-log slope of
// ||u(2 delta) - u(delta)||_{W^{1,p}} against delta over dyadic pairs
// (T/2^{j+1}, T/2^j).  Theory guarantees exponent >= theta/2.
struct HolderReport {
  bool applicable = true;
  double theta = 0.0;
  double slope = 0.0;
  std::vector<double> gaps, moduli;
  double modulus_constant = 0.0;  // max moduli / gap^{theta/2}
  bool pass = false;              // slope >= theta/2 - 0.1
};
HolderReport time_holder_check(const MildSolution& sol, const TimeSliceFn& f,
                               const TimeSliceFn* g, int n_gaps = 5);

// Transform-PDE solve: dU/dt = (1/2) Lap U + g . grad U + g with g the
// time-reversed singular drift component, U(0) = 0.  Requires the smallness
// condition 2 c0 ||g||_w < 1; the resulting Phi(t,x) = x + U(T-t, x) is then
// a bi-Lipschitz diffeomorphism with gradient in (delta, 2 - delta).
struct TransformSolution {
  MildSolution U;
  double delta = 0.0;  // 1 - ||U||_{W^{1,inf}}, in (0, 1)
  bool grad_phi_in_bounds = false;
  bool psi_slope_in_bounds = false;
  double smallness_lhs = 0.0;        // ||g||_w
  double smallness_threshold = 0.0;  // 1 / (2 c0)
};
TransformSolution solve_transform_pde(const TimeSliceFn& reversed_b1,
                                      const ExponentPair& exps,
                                      const SpatialGrid& grid,
                                      const SolverOptions& opt = {});

}  // namespace critsde
