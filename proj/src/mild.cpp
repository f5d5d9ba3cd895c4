#include "critsde/mild.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "critsde/quadrature.hpp"
#include "critsde/spaces.hpp"

namespace critsde {

GriddedSliceFn::GriddedSliceFn(SpaceTimeField field, ExponentPair exps,
                               SpatialGrid target)
    : field_(std::move(field)), exps_(exps), target_(target) {
  field_.validate();
  exps_.validate();
  same_grid_ = (field_.grid == target_);
}

void GriddedSliceFn::eval(double s, std::span<double> out) const {
  const auto& ts = field_.times;
  const std::size_t n = ts.size();
  // Bracketing indices and weighted interpolation factors.
  std::size_t i0, i1;
  double a0, a1;  // slice blend weights applied to the weighted profile
  const double w_s = exps_.weight(std::max(s, 1e-300));
  auto wgt = [&](std::size_t i) {
    return ts[i] > 0.0 ? exps_.weight(ts[i]) : 0.0;
  };
  if (s <= ts.front()) {
    // Constant extension of the weighted profile below the first node.
    i0 = i1 = (ts.front() > 0.0 || n == 1) ? 0 : 1;
    if (i0 < n && ts[i0] <= 0.0) {
      a0 = a1 = 0.0;  // field starts at 0 with nothing before: slice is 0
    } else {
      a0 = a1 = 0.5 * wgt(i0) / w_s;
    }
  } else if (s >= ts.back()) {
    i0 = i1 = n - 1;
    a0 = a1 = 0.5 * wgt(i0) / w_s;
  } else {
    i1 = static_cast<std::size_t>(
        std::upper_bound(ts.begin(), ts.end(), s) - ts.begin());
    i0 = i1 - 1;
    const double lam = (s - ts[i0]) / (ts[i1] - ts[i0]);
    a0 = (1.0 - lam) * wgt(i0) / w_s;
    a1 = lam * wgt(i1) / w_s;
  }

  const auto s0 = field_.slice(i0);
  const auto s1 = field_.slice(i1);
  if (same_grid_) {
    for (std::size_t i = 0; i < out.size(); ++i)
      out[i] = a0 * s0[i] + a1 * s1[i];
    return;
  }
  // Linear resample in x onto the target grid.
  const double hf = field_.grid.h();
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double x = target_.x(i);
    const double fi = (x + field_.grid.L) / hf;
    if (fi <= 0.0) {
      out[i] = a0 * s0.front() + a1 * s1.front();
    } else if (fi >= static_cast<double>(field_.grid.n_points - 1)) {
      out[i] = a0 * s0.back() + a1 * s1.back();
    } else {
      const auto j = static_cast<std::size_t>(fi);
      const double mu = fi - static_cast<double>(j);
      out[i] = a0 * ((1.0 - mu) * s0[j] + mu * s0[j + 1]) +
               a1 * ((1.0 - mu) * s1[j] + mu * s1[j + 1]);
    }
  }
}

std::vector<double> solver_time_grid(double T, const SolverOptions& opt) {
  if (!(T > 0.0)) throw DomainError("solver_time_grid: T > 0 required");
  std::vector<double> ts{0.0};
  const double coarse = T * opt.coarsest_step_frac;
  double t = T * opt.t_floor_frac;
  // Geometric ramp: gaps grow by step_ratio until they reach the coarse step.
  while (t * (opt.step_ratio - 1.0) < coarse && t < T) {
    ts.push_back(t);
    t *= opt.step_ratio;
  }
  // Uniform tail up to T.
  double t0 = ts.back();
  const auto n_tail = static_cast<std::size_t>(std::ceil((T - t0) / coarse));
  for (std::size_t k = 1; k <= n_tail; ++k)
    ts.push_back(t0 + (T - t0) * static_cast<double>(k) /
                          static_cast<double>(n_tail));
  ts.back() = T;
  return ts;
}

namespace {

// Linear interpolation of stored gradient slices at time s (constant
// extension below the first positive node).
void interp_slices(const std::vector<double>& times,
                   const std::vector<double>& data, std::size_t nx, double s,
                   std::span<double> out) {
  const std::size_t n = times.size();
  std::size_t i1 = static_cast<std::size_t>(
      std::upper_bound(times.begin(), times.end(), s) - times.begin());
  if (i1 == 0) i1 = 1;
  if (i1 >= n) i1 = n - 1;
  std::size_t i0 = i1 - 1;
  double lam = (s - times[i0]) / (times[i1] - times[i0]);
  lam = std::clamp(lam, 0.0, 1.0);
  if (i0 == 0 && times[0] == 0.0 && s <= times[1]) {
    // constant extension toward 0: use the first positive slice
    i0 = i1 = 1;
    lam = 0.0;
  }
  const double* d0 = data.data() + i0 * nx;
  const double* d1 = data.data() + i1 * nx;
  for (std::size_t i = 0; i < nx; ++i)
    out[i] = (1.0 - lam) * d0[i] + lam * d1[i];
}

struct DuhamelWorkspace {
  std::vector<double> fslice, gslice, gu, acc_u, acc_g;
};

// One evaluation of the Duhamel operator at target time t from iterate
// gradient slices (gu_times/gu_data); writes u(t) and grad u(t).
void apply_duhamel(double t, const TimeSliceFn& f, const TimeSliceFn* g,
                   const std::vector<double>& gu_times,
                   const std::vector<double>& gu_data, const ExponentPair& e,
                   const SpatialGrid& grid, const SolverOptions& opt,
                   DuhamelWorkspace& ws, std::span<double> out_u,
                   std::span<double> out_gu) {
  const std::size_t nx = grid.n_points;
  const double h = grid.h();
  const DuhamelRule rule = duhamel_rule(t, e.q, opt.gl_nodes);
  ws.fslice.resize(nx);
  ws.gslice.resize(nx);
  ws.gu.resize(nx);
  std::fill(out_u.begin(), out_u.end(), 0.0);
  std::fill(out_gu.begin(), out_gu.end(), 0.0);
  const ConvolveOptions copt{opt.strict};
  for (std::size_t a = 0; a < rule.s.size(); ++a) {
    const double s = rule.s[a];
    const double tau = rule.tau[a];
    if (!(tau > 0.0) || !(s > 0.0)) continue;
    f.eval(s, ws.fslice);
    if (g) {
      g->eval(s, ws.gslice);
      interp_slices(gu_times, gu_data, nx, s, std::span<double>(ws.gu));
      for (std::size_t i = 0; i < nx; ++i)
        ws.fslice[i] += ws.gslice[i] * ws.gu[i];
    }
    const auto cu = heat_convolve(ws.fslice, tau, h, grid.L, copt);
    const auto cg = grad_heat_convolve(ws.fslice, tau, h, grid.L, copt);
    const double w = rule.w[a];
    for (std::size_t i = 0; i < nx; ++i) {
      out_u[i] += w * cu[i];
      out_gu[i] += w * cg[i];
    }
  }
}

double weighted_fn_norm(const TimeSliceFn& fn, const std::vector<double>& times,
                        const ExponentPair& e, const SpatialGrid& grid) {
  std::vector<double> slice(grid.n_points);
  double norm = 0.0;
  for (double t : times) {
    if (!(t > 0.0)) continue;
    fn.eval(t, slice);
    norm = std::max(norm, e.weight(t) * lp_norm(slice, grid.h(), e.p));
  }
  return norm;
}

}  // namespace

MildSolution solve_mild(const TimeSliceFn& f, const TimeSliceFn* g,
                        const ExponentPair& exps, const SpatialGrid& grid,
                        const SolverOptions& opt) {
  exps.require_critical();
  grid.validate();
  MildSolution sol;
  sol.exps = exps;
  sol.grid = grid;
  sol.constants = compute_constants(exps);
  sol.times = solver_time_grid(exps.T, opt);

  const std::size_t nt = sol.times.size(), nx = grid.n_points;
  sol.u.assign(nt * nx, 0.0);
  sol.grad_u.assign(nt * nx, 0.0);

  sol.f_weighted_norm = weighted_fn_norm(f, sol.times, exps, grid);
  if (g) {
    sol.g_weighted_norm = weighted_fn_norm(*g, sol.times, exps, grid);
    const double bound = sol.constants.c0 * sol.g_weighted_norm;
    if (bound >= 1.0)
      throw ConvergenceError(
          "solve_mild: non-contractive drift coefficient; measured "
          "contraction bound c0*||g||_w = " +
          std::to_string(bound) + " >= 1");
  }

  std::vector<double> next_u(nt * nx, 0.0), next_gu(nt * nx, 0.0);
  DuhamelWorkspace ws;
  double prev_diff = -1.0;
  for (int iter = 1; iter <= opt.max_iter; ++iter) {
    double diff = 0.0;
    for (std::size_t ti = 1; ti < nt; ++ti) {
      apply_duhamel(sol.times[ti], f, g, sol.times, sol.grad_u, exps, grid,
                    opt, ws,
                    std::span<double>(next_u.data() + ti * nx, nx),
                    std::span<double>(next_gu.data() + ti * nx, nx));
    }
    for (std::size_t i = 0; i < nt * nx; ++i) {
      diff = std::max(diff, std::abs(next_u[i] - sol.u[i]));
      diff = std::max(diff, std::abs(next_gu[i] - sol.grad_u[i]));
    }
    sol.u.swap(next_u);
    sol.grad_u.swap(next_gu);
    sol.iterations = iter;
    sol.residual = diff;
    if (prev_diff > 10.0 * opt.tol && diff > 0.0)
      sol.contraction_ratio = std::max(sol.contraction_ratio, diff / prev_diff);
    if (diff <= opt.tol) break;
    prev_diff = diff;
    if (iter == opt.max_iter)
      throw ConvergenceError(
          "solve_mild: Picard iteration did not reach tol; last residual = " +
          std::to_string(diff));
  }
  if (!all_finite(sol.u) || !all_finite(sol.grad_u))
    throw DataError("solve_mild: non-finite solution values");
  for (std::size_t i = 0; i < nt * nx; ++i) {
    sol.sup_u = std::max(sol.sup_u, std::abs(sol.u[i]));
    sol.sup_grad = std::max(sol.sup_grad, std::abs(sol.grad_u[i]));
  }
  return sol;
}

MildSolution solve_mild(const SpaceTimeField& f, const SpaceTimeField* g,
                        const ExponentPair& exps, const SolverOptions& opt) {
  GriddedSliceFn ff(f, exps, f.grid);
  if (!g) return solve_mild(ff, nullptr, exps, f.grid, opt);
  GriddedSliceFn gf(*g, exps, f.grid);
  return solve_mild(ff, &gf, exps, f.grid, opt);
}

MildSlices eval_mild_at(const MildSolution& sol, const TimeSliceFn& f,
                        const TimeSliceFn* g, double t) {
  if (!(t > 0.0) || t > sol.exps.T * (1.0 + 1e-12))
    throw DomainError("eval_mild_at: t in (0, T] required");
  MildSlices out;
  out.u.assign(sol.grid.n_points, 0.0);
  out.grad_u.assign(sol.grid.n_points, 0.0);
  DuhamelWorkspace ws;
  SolverOptions opt;
  apply_duhamel(t, f, g, sol.times, sol.grad_u, sol.exps, sol.grid, opt, ws,
                std::span<double>(out.u), std::span<double>(out.grad_u));
  return out;
}

GradientBoundReport check_gradient_bound(const MildSolution& sol,
                                         double slack) {
  GradientBoundReport r;
  r.slack = slack;
  r.sup_u = sol.sup_u;
  r.sup_grad = sol.sup_grad;
  r.lhs_w1inf = std::max(sol.sup_u, sol.sup_grad);
  r.f_norm = sol.f_weighted_norm;
  r.g_norm = sol.g_weighted_norm;
  const double c0 = sol.constants.c0;
  const double denom = 1.0 - c0 * r.g_norm;
  if (!(denom > 0.0)) throw DomainError("check_gradient_bound: c0*||g|| >= 1");
  r.rhs_grad = sol.constants.c_grad * r.f_norm / denom;
  r.rhs_w1inf = c0 * r.f_norm / denom;
  r.pass = (r.sup_grad <= r.rhs_grad * (1.0 + slack)) &&
           (r.lhs_w1inf <= r.rhs_w1inf * (1.0 + slack));
  return r;
}

HolderReport time_holder_check(const MildSolution& sol, const TimeSliceFn& f,
                               const TimeSliceFn* g, int n_gaps) {
  HolderReport r;
  r.theta = sol.constants.theta;
  if (!(r.theta > 0.0)) {
    r.applicable = false;
    return r;
  }
  const double T = sol.exps.T;
  const double h = sol.grid.h();
  const double p = sol.exps.p;
  MildSlices hi = eval_mild_at(sol, f, g, T);
  std::vector<double> diff(sol.grid.n_points);
  for (int j = 0; j < n_gaps; ++j) {
    const double t_lo = T / std::pow(2.0, j + 1);
    const double gap = t_lo;
    MildSlices lo = eval_mild_at(sol, f, g, t_lo);
    double mod = 0.0;
    for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = hi.u[i] - lo.u[i];
    mod += lp_norm(diff, h, p);
    for (std::size_t i = 0; i < diff.size(); ++i)
      diff[i] = hi.grad_u[i] - lo.grad_u[i];
    mod += lp_norm(diff, h, p);
    r.gaps.push_back(gap);
    r.moduli.push_back(mod);
    r.modulus_constant =
        std::max(r.modulus_constant, mod / std::pow(gap, r.theta / 2.0));
    hi = std::move(lo);
  }
  r.slope = loglog_slope(r.gaps, r.moduli);
  r.pass = r.slope >= r.theta / 2.0 - 0.1;
  return r;
}

TransformSolution solve_transform_pde(const TimeSliceFn& reversed_b1,
                                      const ExponentPair& exps,
                                      const SpatialGrid& grid,
                                      const SolverOptions& opt) {
  TransformSolution ts;
  const KernelConstants kc = compute_constants(exps);
  const auto grid_times = solver_time_grid(exps.T, opt);
  ts.smallness_lhs = weighted_fn_norm(reversed_b1, grid_times, exps, grid);
  ts.smallness_threshold = 1.0 / (2.0 * kc.c0);
  if (!(ts.smallness_lhs < ts.smallness_threshold))
    throw DomainError(
        "solve_transform_pde: drift smallness condition violated: "
        "||reversed b1||_w = " +
        std::to_string(ts.smallness_lhs) + " >= 1/(2 c0) = " +
        std::to_string(ts.smallness_threshold));

  ts.U = solve_mild(reversed_b1, &reversed_b1, exps, grid, opt);
  ts.delta = 1.0 - std::max(ts.U.sup_u, ts.U.sup_grad);
  const double fp_slack = 1e-9;
  // Phi(t,x) = x + U(T-t, x): its x-gradient at every node is 1 + grad U.
  bool phi_ok = ts.delta > 0.0;
  double min_slope = 2.0, max_slope = 0.0;
  for (double gu : ts.U.grad_u) {
    const double s = 1.0 + gu;
    min_slope = std::min(min_slope, s);
    max_slope = std::max(max_slope, s);
  }
  phi_ok = phi_ok && min_slope > ts.delta - fp_slack &&
           max_slope < 2.0 - ts.delta + fp_slack;
  ts.grad_phi_in_bounds = phi_ok;
  ts.psi_slope_in_bounds =
      phi_ok && (1.0 / max_slope > 1.0 / (2.0 - ts.delta) - fp_slack) &&
      (1.0 / min_slope < 1.0 / ts.delta + fp_slack);
  return ts;
}

}  // namespace critsde
