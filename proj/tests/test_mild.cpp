#include <doctest.h>

#include <cmath>
#include <vector>

#include "critsde/common.hpp"
#include "critsde/drift.hpp"
#include "critsde/field.hpp"
#include "critsde/heat.hpp"
#include "critsde/mild.hpp"

using namespace critsde;

namespace {

const ExponentPair kExps{2.0, 4.0, 1, 1.0};

// f(t, x) = phi(x), constant in time.
struct ProfileSlice : TimeSliceFn {
  SpatialProfile profile;
  SpatialGrid grid;
  void eval(double, std::span<double> out) const override {
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = profile.eval(grid.x(i));
  }
};

// g(t, x) = gamma, constant everywhere.
struct ConstantSlice : TimeSliceFn {
  double gamma = 0.0;
  void eval(double, std::span<double> out) const override {
    for (double& v : out) v = gamma;
  }
};

ProfileSlice gauss_source(const SpatialGrid& grid, double amplitude = 1.0) {
  ProfileSlice f;
  f.profile = gaussian_density_profile();
  f.profile.amplitude *= amplitude;
  f.grid = grid;
  return f;
}

}  // namespace

TEST_CASE("driftless mild solution reproduces the closed-form duhamel value") {
  // u(t, x) = int_0^t K(t-s) * phi ds with phi = N(0,1) density:
  // u(1, 0) = int_0^1 (2 pi (1 + tau))^{-1/2} dtau = 2 (sqrt(2) - 1) / sqrt(2 pi)
  const SpatialGrid grid{12.0, 1025};
  const auto f = gauss_source(grid);
  const MildSolution sol = solve_mild(f, nullptr, kExps, grid);

  CHECK(sol.residual <= 1e-8);
  CHECK(sol.iterations <= 3);  // g = 0 settles after one corrective sweep
  CHECK(sol.times.front() == 0.0);
  CHECK(sol.times.back() == doctest::Approx(1.0));

  const double exact = 2.0 * (std::sqrt(2.0) - 1.0) / std::sqrt(2.0 * kPi);
  const double u_T0 = sol.u_slice(sol.times.size() - 1)[grid.index_of(0.0)];
  CHECK(u_T0 == doctest::Approx(exact).epsilon(2e-3));

  // the weighted source norm is ||N(0,1)||_{L^2} = (4 pi)^{-1/4}
  CHECK(sol.f_weighted_norm ==
        doctest::Approx(std::pow(4.0 * kPi, -0.25)).epsilon(1e-4));

  // a fresh Duhamel application at t = T reproduces the converged slice
  const MildSlices probe = eval_mild_at(sol, f, nullptr, 1.0);
  CHECK(probe.u[grid.index_of(0.0)] == doctest::Approx(u_T0).epsilon(1e-9));
}

TEST_CASE("mild solver is linear in the source when g is absent") {
  const SpatialGrid grid{12.0, 513};
  const auto f1 = gauss_source(grid);
  const auto f2 = gauss_source(grid, 2.0);
  const MildSolution a = solve_mild(f1, nullptr, kExps, grid);
  const MildSolution b = solve_mild(f2, nullptr, kExps, grid);
  REQUIRE(a.u.size() == b.u.size());
  double worst = 0.0;
  for (std::size_t i = 0; i < a.u.size(); ++i)
    worst = std::max(worst, std::abs(b.u[i] - 2.0 * a.u[i]));
  CHECK(worst < 1e-10);
  CHECK(b.sup_u == doctest::Approx(2.0 * a.sup_u).epsilon(1e-10));
}

TEST_CASE("gradient slices agree with centered differences of u") {
  const SpatialGrid grid{12.0, 1025};
  const auto f = gauss_source(grid);
  const MildSolution sol = solve_mild(f, nullptr, kExps, grid);
  const std::size_t ti = sol.times.size() - 1;
  const auto u = sol.u_slice(ti);
  const auto du = sol.grad_slice(ti);
  const double h = grid.h();
  double worst = 0.0;
  for (std::size_t i = 1; i + 1 < grid.n_points; ++i) {
    const double centered = (u[i + 1] - u[i - 1]) / (2.0 * h);
    worst = std::max(worst, std::abs(du[i] - centered));
  }
  CHECK(worst < 1e-3);
}

TEST_CASE("picard contraction tracks the operator norm of g") {
  const SpatialGrid grid{12.0, 513};
  const auto f = gauss_source(grid);
  const KernelConstants kc = compute_constants(kExps);

  // constant g has weighted norm gamma * (2L)^{1/2}; aim the bound at 0.4
  ConstantSlice g;
  const double target = 0.4;
  g.gamma = target / (kc.c0 * std::sqrt(2.0 * grid.L));

  const MildSolution sol = solve_mild(f, &g, kExps, grid);
  CHECK(sol.g_weighted_norm ==
        doctest::Approx(g.gamma * std::sqrt(2.0 * grid.L)).epsilon(1e-6));
  CHECK(sol.iterations > 2);  // the transport term forces real iteration
  CHECK(sol.contraction_ratio > 0.0);
  CHECK(sol.contraction_ratio <= target + 0.05);

  const GradientBoundReport rep = check_gradient_bound(sol);
  CHECK(rep.pass);
  CHECK(rep.rhs_w1inf ==
        doctest::Approx(kc.c0 * rep.f_norm / (1.0 - kc.c0 * rep.g_norm))
            .epsilon(1e-12));
  CHECK(std::max(rep.sup_u, rep.sup_grad) <= rep.rhs_w1inf * (1.0 + rep.slack));
}

TEST_CASE("non-contractive transport coefficients are refused") {
  const SpatialGrid grid{12.0, 257};
  const auto f = gauss_source(grid);
  const KernelConstants kc = compute_constants(kExps);
  ConstantSlice g;
  g.gamma = 1.2 / (kc.c0 * std::sqrt(2.0 * grid.L));  // c0 ||g||_w = 1.2
  CHECK_THROWS_AS((void)solve_mild(f, &g, kExps, grid), ConvergenceError);
}

TEST_CASE("transform solve keeps the map slopes in the bi-lipschitz window") {
  const SpatialGrid grid{12.0, 513};
  DriftSpec drift = build_example_drift(gaussian_density_profile(), kExps);
  drift.b1->profile.amplitude *= 0.25;
  const ReversedDriftSliceFn rev(*drift.b1, grid);

  const TransformSolution ts = solve_transform_pde(rev, kExps, grid);
  // ||I_T b1||_w = 0.25 ||N(0,1)||_{L^2} / log 2, below 1/(2 c0)
  const double norm_exact = 0.25 * std::pow(4.0 * kPi, -0.25) / std::log(2.0);
  CHECK(ts.smallness_lhs == doctest::Approx(norm_exact).epsilon(1e-6));
  CHECK(ts.smallness_threshold ==
        doctest::Approx(1.0 / (2.0 * compute_constants(kExps).c0))
            .epsilon(1e-12));
  CHECK(ts.delta > 0.0);
  CHECK(ts.delta < 1.0);
  CHECK(ts.grad_phi_in_bounds);
  CHECK(ts.psi_slope_in_bounds);
  CHECK(ts.U.sup_grad < 1.0);
}

TEST_CASE("transform solve refuses drifts that break the smallness condition") {
  const SpatialGrid grid{12.0, 257};
  DriftSpec drift = build_example_drift(gaussian_density_profile(), kExps);
  drift.b1->profile.amplitude *= 0.5;  // norm 0.383 > 1/(2 c0) = 0.2997
  const ReversedDriftSliceFn rev(*drift.b1, grid);
  CHECK_THROWS_AS((void)solve_transform_pde(rev, kExps, grid), DomainError);
}
