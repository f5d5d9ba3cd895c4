#include <doctest.h>

#include <cmath>
#include <functional>
#include <vector>

#include "critsde/drift.hpp"
#include "critsde/quadrature.hpp"
#include "critsde/spaces.hpp"

using namespace critsde;

namespace {

std::vector<double> geometric_times(double t_min, double t_max, double ratio) {
  std::vector<double> ts{t_min};
  while (ts.back() * ratio < t_max) ts.push_back(ts.back() * ratio);
  ts.push_back(t_max);
  return ts;
}

SpaceTimeField separable_field(const std::vector<double>& times, double T,
                               const SpatialGrid& grid,
                               const std::function<double(double)>& wt,
                               const std::function<double(double)>& prof) {
  SpaceTimeField f(times, T, grid);
  for (std::size_t ti = 0; ti < times.size(); ++ti) {
    const double w = wt(times[ti]);
    auto s = f.slice(ti);
    for (std::size_t xi = 0; xi < grid.n_points; ++xi)
      s[xi] = w * prof(grid.x(xi));
  }
  return f;
}

double gauss_density(double x) {
  return std::exp(-0.5 * x * x) / std::sqrt(2.0 * kPi);
}

const double kPhiL2 = 1.0 / std::sqrt(2.0 * std::sqrt(kPi));  // ||N(0,1)||_2

}  // namespace

TEST_CASE("weighted norm cancels the critical power exactly") {
  ExponentPair exps;  // p=2, q=4, T=1
  const SpatialGrid grid{12.0, 4097};
  const auto times = geometric_times(1e-10, 1.0, 1.3);
  const auto f = separable_field(times, 1.0, grid,
                                 [](double t) { return std::pow(t, -0.25); },
                                 gauss_density);
  // t^{1/4} t^{-1/4} ||phi||_2 is t-free: the sup equals ||N(0,1)||_2
  CHECK(weighted_norm(f, exps) == doctest::Approx(kPhiL2).epsilon(1e-8));
  const auto prof = weighted_profile(f, exps);
  for (double v : prof) CHECK(v == doctest::Approx(kPhiL2).epsilon(1e-8));
}

TEST_CASE("classify: pure critical power is bounded but neither vanishing nor integrable") {
  ExponentPair exps;
  exps.T = 0.5;
  const SpatialGrid grid{10.0, 513};
  const auto times = geometric_times(1e-12, 0.5, 1.08);
  const auto f = separable_field(times, 0.5, grid,
                                 [](double t) { return std::pow(t, -0.25); },
                                 gauss_density);
  const SpaceMembership m = classify_space(f, exps);
  CHECK(m.linf_q_norm == doctest::Approx(kPhiL2).epsilon(1e-4));
  CHECK_FALSE(m.in_c0q);
  CHECK(m.limit_at_zero == doctest::Approx(kPhiL2).epsilon(1e-4));
  CHECK_FALSE(m.lq_member);  // int t^{-1} dt diverges logarithmically
}

TEST_CASE("classify: log damping separates L^q membership at beta = 1/q") {
  ExponentPair exps;
  exps.T = 0.5;
  const SpatialGrid grid{10.0, 513};
  const auto times = geometric_times(1e-12, 0.5, 1.08);
  const auto damped = [&](double beta) {
    return separable_field(times, 0.5, grid,
                           [beta](double t) {
                             return std::pow(t, -0.25) *
                                    std::pow(std::abs(std::log(t)), -beta);
                           },
                           gauss_density);
  };

  // beta = 1: vanishing weighted limit and a convergent q-integral
  const SpaceMembership m1 = classify_space(damped(1.0), exps, 0.05);
  CHECK(m1.in_c0q);
  CHECK(m1.lq_member);
  CHECK(m1.limit_trend < 1.0);  // weighted profile still decaying at t_min

  // beta = 0.5 > 1/q: weighted limit vanishes and the q-integral converges
  const SpaceMembership m05 = classify_space(damped(0.5), exps, 0.15);
  CHECK(m05.in_c0q);
  CHECK(m05.lq_member);

  // beta = 0.2 < 1/q: the q-integral diverges (slow log order)
  const SpaceMembership m02 = classify_space(damped(0.2), exps, 1.0);
  CHECK_FALSE(m02.lq_member);
}

TEST_CASE("classify rejects a zero smallest time") {
  ExponentPair exps;
  const SpatialGrid grid{4.0, 65};
  SpaceTimeField f(std::vector<double>{0.0, 0.5, 1.0}, 1.0, grid);
  CHECK_THROWS_AS(classify_space(f, exps), DomainError);
}

TEST_CASE("reverse time: affine factor and involution") {
  const SpatialGrid grid{4.0, 129};
  const auto times = linspace(0.0, 1.0, 21);  // reflection-symmetric
  const auto f = separable_field(times, 1.0, grid,
                                 [](double t) { return t; }, gauss_density);
  const auto rf = reverse_time(f);
  for (std::size_t ti = 0; ti < times.size(); ++ti)
    for (std::size_t xi = 0; xi < grid.n_points; xi += 16)
      CHECK(rf.at(ti, xi) ==
            doctest::Approx((1.0 - times[ti]) * gauss_density(grid.x(xi)))
                .epsilon(1e-13));
  const auto rrf = reverse_time(rf);
  for (std::size_t i = 0; i < f.values.size(); i += 37)
    CHECK(rrf.values[i] == f.values[i]);
}

TEST_CASE("reverse time: asymmetric grids need the reflected-grid opt-in") {
  const SpatialGrid grid{4.0, 65};
  const std::vector<double> times = {0.1, 0.2, 0.8};
  const auto f = separable_field(times, 1.0, grid,
                                 [](double t) { return t; }, gauss_density);
  CHECK_THROWS_AS(reverse_time(f), DomainError);
  const auto rf = reverse_time(f, true);
  REQUIRE(rf.times.size() == 3);
  CHECK(rf.times[0] == doctest::Approx(0.2));
  CHECK(rf.times[2] == doctest::Approx(0.9));
  CHECK(rf.at(0, 32) == doctest::Approx(0.8 * gauss_density(grid.x(32))));
}

TEST_CASE("mollifier: unit mass, compact support, parity") {
  const double h = 1.0 / 256.0;
  const MollifierSpec m = build_mollifier(4, h);
  REQUIRE(m.kern_half.size() >= 3);
  // discrete mass: kern[0] + 2 * sum_{j>0} kern[j], times h
  double mass = m.kern_half[0];
  for (std::size_t j = 1; j < m.kern_half.size(); ++j)
    mass += 2.0 * m.kern_half[j];
  CHECK(mass * h == doctest::Approx(1.0).epsilon(1e-12));
  // support within |x| <= 1/n
  CHECK(static_cast<double>(m.kern_half.size() - 1) * h <= 0.25 + h);
  CHECK(m.second_moment > 0.0);
  CHECK(m.second_moment < 0.25 * 0.25);
  CHECK_THROWS_AS(build_mollifier(64, 1.0 / 100.0), ResolutionError);
}

TEST_CASE("mollify preserves mass and is L2 non-expansive") {
  const SpatialGrid grid{8.0, 2049};
  const auto times = std::vector<double>{0.25, 0.5, 1.0};
  const auto f = separable_field(times, 1.0, grid,
                                 [](double) { return 1.0; }, gauss_density);
  const auto fn = mollify(f, 8);
  for (std::size_t ti = 0; ti < times.size(); ++ti) {
    CHECK(trapezoid(fn.slice(ti), grid.h()) ==
          doctest::Approx(trapezoid(f.slice(ti), grid.h())).epsilon(1e-12));
    CHECK(lp_norm(fn.slice(ti), grid.h(), 2.0) <=
          lp_norm(f.slice(ti), grid.h(), 2.0) * (1.0 + 1e-12));
  }
}

TEST_CASE("mollification error decays at second order for smooth fields") {
  ExponentPair exps;
  const SpatialGrid grid{8.0, 8193};
  const auto times = std::vector<double>{0.3, 0.7, 1.0};
  const auto f = separable_field(times, 1.0, grid,
                                 [](double) { return 1.0; }, gauss_density);
  const MollificationProfile prof =
      mollification_profile(f, exps, {4, 8, 16, 32});
  REQUIRE(prof.errors.size() == 4);
  for (std::size_t i = 0; i + 1 < prof.errors.size(); ++i)
    CHECK(prof.errors[i + 1] < prof.errors[i]);
  CHECK(prof.slope == doctest::Approx(-2.0).epsilon(0.05));
}

TEST_CASE("counterexample: unit slice norms that no mollifier tracks") {
  const int k_max = 8;
  const double h = 1.0 / (4.0 * k_max * k_max);
  const SpaceTimeField f = counterexample_field(k_max, h, k_max + 2.0);
  // every slice has unit L^2 norm by construction
  for (std::size_t ti = 0; ti < f.n_times(); ++ti)
    CHECK(lp_norm(f.slice(ti), h, 2.0) == doctest::Approx(1.0).epsilon(1e-10));
  const CounterexampleCheck chk = counterexample_check(f, {2, 4});
  REQUIRE(chk.worst_sq_error.size() == 2);
  for (double w : chk.worst_sq_error) CHECK(w >= 0.23);
  for (int k : chk.worst_k) CHECK(k >= 1);
}

TEST_CASE("example drift: reversed norm and membership postconditions") {
  ExponentPair exps;  // T = 1
  const DriftSpec drift = build_example_drift(gaussian_density_profile(), exps);
  REQUIRE(drift.b1.has_value());
  // || s^{1/q} w(T-s) phi ||: the example's sup sits at s = T with value
  // ||phi||_2 / log 2
  CHECK(drift.b1->reversed_weighted_norm(exps) ==
        doctest::Approx(kPhiL2 / std::log(2.0)).epsilon(1e-10));

  const SpatialGrid grid{10.0, 513};
  const auto times = geometric_times(1e-10, 1.0, 1.1);
  const auto rf = sample_reversed_drift(*drift.b1, grid, times);
  const SpaceMembership m = classify_space(rf, exps, 0.05);
  CHECK(m.in_c0q);
  CHECK(m.lq_member);
}

TEST_CASE("example drift forward factor blows up only at the horizon") {
  ExponentPair exps;
  const DriftSpec drift = build_example_drift(gaussian_density_profile(), exps);
  const auto& ts = drift.b1->time;
  CHECK(std::isfinite(ts.forward(0.999999)));
  CHECK(ts.forward(0.5) > 0.0);
  CHECK_THROWS_AS(ts.forward(1.0), DomainError);
  // reversed factor at s: s^{-1/4}/|log(s/2)|, finite on (0, T]
  CHECK(ts.reversed(1.0) ==
        doctest::Approx(1.0 / std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("reversed weighted sup closed forms per time kind") {
  const double T = 1.0, qw = 4.0;
  TimeSingularity cst;
  cst.kind = TimeSingularity::Kind::constant;
  cst.horizon = T;
  CHECK(cst.reversed_weighted_sup(qw) ==
        doctest::Approx(std::pow(T, 1.0 / qw)).epsilon(1e-12));

  TimeSingularity pow_ok;  // beta = 1/q: exactly critical, sup = 1
  pow_ok.kind = TimeSingularity::Kind::reversed_power;
  pow_ok.horizon = T;
  pow_ok.beta = 0.25;
  CHECK(pow_ok.reversed_weighted_sup(qw) == doctest::Approx(1.0));

  TimeSingularity pow_bad;  // beta > 1/q: escapes the weighted space
  pow_bad.kind = TimeSingularity::Kind::reversed_power;
  pow_bad.horizon = T;
  pow_bad.beta = 0.5;
  CHECK(std::isinf(pow_bad.reversed_weighted_sup(qw)));
}
