// Acceptance gate: every release-blocking behavior is checked here, one
// printed line per criterion.  Tolerances are pinned constants; the binary
// exits nonzero if any line fails.  Expected wall time is a few minutes,
// dominated by the Monte Carlo criteria.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "critsde/common.hpp"
#include "critsde/drift.hpp"
#include "critsde/heat.hpp"
#include "critsde/io.hpp"
#include "critsde/mild.hpp"
#include "critsde/quadrature.hpp"
#include "critsde/rng.hpp"
#include "critsde/sde.hpp"
#include "critsde/spaces.hpp"
#include "critsde/stats.hpp"
#include "critsde/zvonkin.hpp"

using namespace critsde;

namespace {

// --- pinned tolerances ------------------------------------------------------
constexpr double kCounterexampleBound = 0.23;  // 1/4 minus grid slack
constexpr double kCounterexampleBudget = 30.0;       // seconds
constexpr double kMollifyFinalError = 1e-2;          // at scale n = 256
constexpr double kMollifyBudget = 30.0;              // seconds
constexpr double kConstantsRel = 1e-10;
constexpr double kGradSlack = 1.05;
constexpr double kGradBudgetPerCase = 120.0;         // seconds
constexpr double kDuhamelTarget = 0.3305;
constexpr double kDuhamelTol = 2e-3;
constexpr double kContractionMax = 0.45;             // bound 0.4 plus slack
constexpr double kKrylovBudget = 300.0;              // seconds
constexpr double kRoundTripTol = 1e-6;
constexpr double kDensityRel = 0.05;

const ExponentPair kExps{2.0, 4.0, 1, 1.0};

int g_failures = 0;

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

void report(const std::string& name, bool pass, const std::string& detail) {
  std::cout << (pass ? "[PASS] " : "[FAIL] ") << name << ": " << detail
            << std::endl;
  if (!pass) ++g_failures;
}

// Runs one criterion body, converting exceptions into a failed line.
template <typename Fn>
void criterion(const std::string& name, Fn&& body) {
  try {
    body();
  } catch (const std::exception& e) {
    report(name, false, std::string("threw: ") + e.what());
  }
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

// f(t, x) = phi(x), constant in time.
struct ProfileSlice : TimeSliceFn {
  SpatialProfile profile;
  SpatialGrid grid;
  void eval(double, std::span<double> out) const override {
    for (std::size_t i = 0; i < out.size(); ++i)
      out[i] = profile.eval(grid.x(i));
  }
};

struct ConstantSlice : TimeSliceFn {
  double gamma = 0.0;
  void eval(double, std::span<double> out) const override {
    for (double& v : out) v = gamma;
  }
};

DriftSpec example_drift(double amplitude) {
  DriftSpec d = build_example_drift(gaussian_density_profile(), kExps);
  d.b1->profile.amplitude *= amplitude;
  return d;
}

// --- criteria ---------------------------------------------------------------

void crit_counterexample() {
  const auto t0 = std::chrono::steady_clock::now();
  const int k_max = 32;
  const double h = 1.0 / (4.0 * k_max * k_max);
  const double L = k_max + 2.0;
  const SpaceTimeField f = counterexample_field(k_max, h, L);
  const CounterexampleCheck chk = counterexample_check(f, {4, 8, 16});
  const double elapsed = seconds_since(t0);

  double worst_min = 1e300;
  std::string detail = "max_k sup_t ||f_n - f||_2^2 =";
  for (std::size_t i = 0; i < chk.n_list.size(); ++i) {
    worst_min = std::min(worst_min, chk.worst_sq_error[i]);
    detail += " n=" + std::to_string(chk.n_list[i]) + ":" +
              fmt(chk.worst_sq_error[i]);
  }
  detail += " (bound " + fmt(kCounterexampleBound) + ", " + fmt(elapsed) + "s)";
  report("counterexample_lower_bound",
         worst_min >= kCounterexampleBound && elapsed < kCounterexampleBudget,
         detail);
}

void crit_mollification() {
  const auto t0 = std::chrono::steady_clock::now();
  DriftB1 b1;
  b1.time.kind = TimeSingularity::Kind::reversed_power;
  b1.time.beta = 1.0 / kExps.q;
  b1.profile = gaussian_density_profile();

  const SpatialGrid grid{12.0, 24577};
  std::vector<double> times;
  for (int i = 0; i < 12; ++i)
    times.push_back(std::pow(10.0, -3.0 + 3.0 * i / 11.0));
  const SpaceTimeField f = sample_reversed_drift(b1, grid, times);
  const MollificationProfile prof =
      mollification_profile(f, kExps, {4, 16, 64, 256});
  const double elapsed = seconds_since(t0);

  bool decreasing = true;
  for (std::size_t i = 1; i < prof.errors.size(); ++i)
    decreasing = decreasing && prof.errors[i] < prof.errors[i - 1];
  const double final_err = prof.errors.back();
  report("mollification_convergence",
         decreasing && final_err < kMollifyFinalError &&
             elapsed < kMollifyBudget,
         "weighted errors " + fmt(prof.errors.front()) + " .. " +
             fmt(final_err) + " (slope " + fmt(prof.slope) + ", " +
             fmt(elapsed) + "s)");
}

void crit_constants() {
  const KernelConstants kc = compute_constants(kExps);
  // independent oracle via lgamma: B(a,b) = exp(lg a + lg b - lg(a+b))
  const auto lbeta = [](double a, double b) {
    return std::exp(std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b));
  };
  const double c_sup_oracle =
      std::pow(2.0, -0.25) * std::pow(2.0 * kPi, -0.25) * lbeta(0.75, 0.75);
  const double c_grad_oracle = std::pow(2.0, -0.5) * std::pow(kPi, 0.75);
  const double sup_rel = std::abs(kc.c_sup - c_sup_oracle) / c_sup_oracle;
  const double grad_rel = std::abs(kc.c_grad - c_grad_oracle) / c_grad_oracle;
  const bool theta_exact = kc.theta == 0.3;
  const bool c0_max = kc.c0 == std::max(kc.c_sup, kc.c_grad);
  report("explicit_constants",
         sup_rel <= kConstantsRel && grad_rel <= kConstantsRel && theta_exact &&
             c0_max,
         "c_sup rel " + fmt(sup_rel) + ", c_grad rel " + fmt(grad_rel) +
             ", theta " + fmt(kc.theta) + (theta_exact ? " exact" : " off"));
}

// Returns the constant-in-time gaussian solution for reuse by the Duhamel
// criterion.
std::optional<MildSolution> crit_gradient_bound() {
  const SpatialGrid grid{12.0, 1025};
  const KernelConstants kc = compute_constants(kExps);
  std::optional<MildSolution> gaussian_solution;

  struct Case {
    std::string name;
    std::unique_ptr<TimeSliceFn> fn;
  };
  std::vector<Case> cases;
  {
    auto f = std::make_unique<ProfileSlice>();
    f->profile = gaussian_density_profile();
    f->grid = grid;
    cases.push_back({"gaussian", std::move(f)});
  }
  {
    DriftB1 b1;
    b1.time.kind = TimeSingularity::Kind::reversed_power;
    b1.time.beta = 1.0 / kExps.q;
    b1.profile = gaussian_density_profile();
    cases.push_back(
        {"weighted_gaussian", std::make_unique<ReversedDriftSliceFn>(b1, grid)});
  }
  {
    const DriftSpec d = example_drift(1.0);
    cases.push_back(
        {"example_magnitude",
         std::make_unique<ReversedDriftSliceFn>(*d.b1, grid)});
  }

  bool all_ok = true;
  std::string detail;
  for (auto& c : cases) {
    const auto t0 = std::chrono::steady_clock::now();
    const MildSolution sol = solve_mild(*c.fn, nullptr, kExps, grid);
    const double elapsed = seconds_since(t0);
    const double rhs = kc.c_grad * sol.f_weighted_norm * kGradSlack;
    const bool ok = sol.sup_grad <= rhs && elapsed < kGradBudgetPerCase;
    all_ok = all_ok && ok;
    detail += c.name + " sup|grad u|=" + fmt(sol.sup_grad) + "<=" + fmt(rhs) +
              " (" + fmt(elapsed) + "s) ";
    if (c.name == "gaussian") gaussian_solution.emplace(sol);
  }
  report("gradient_bound", all_ok, detail);
  return gaussian_solution;
}

void crit_duhamel(const std::optional<MildSolution>& gaussian_solution) {
  if (!gaussian_solution) {
    report("duhamel_oracle", false, "gaussian solve unavailable");
    return;
  }
  const MildSolution& sol = *gaussian_solution;
  const double u10 =
      sol.u_slice(sol.times.size() - 1)[sol.grid.index_of(0.0)];
  const bool oracle_ok = std::abs(u10 - kDuhamelTarget) <= kDuhamelTol;

  // Picard with a small transport term: bound c0 ||g||_w = 0.4
  const SpatialGrid grid{12.0, 513};
  ProfileSlice f;
  f.profile = gaussian_density_profile();
  f.grid = grid;
  const KernelConstants kc = compute_constants(kExps);
  ConstantSlice g;
  g.gamma = 0.4 / (kc.c0 * std::sqrt(2.0 * grid.L));
  const MildSolution with_g = solve_mild(f, &g, kExps, grid);
  const bool contraction_ok =
      with_g.contraction_ratio > 0.0 &&
      with_g.contraction_ratio <= kContractionMax &&
      with_g.residual <= 1e-8;

  report("duhamel_oracle", oracle_ok && contraction_ok,
         "u(1,0)=" + fmt(u10) + " vs " + fmt(kDuhamelTarget) + "+-" +
             fmt(kDuhamelTol) + "; picard ratio " +
             fmt(with_g.contraction_ratio) + " <= " + fmt(kContractionMax));
}

void crit_krylov() {
  const auto t0 = std::chrono::steady_clock::now();
  const KernelConstants kc = compute_constants(kExps);

  // analytic driftless indicator case
  const double lhs_analytic = brownian_indicator_lhs(1.0, 1.0);
  const double rhs_analytic = kc.c0 * std::sqrt(2.0);
  const bool analytic_ok = lhs_analytic <= rhs_analytic;

  const StepSchedule sched{1.0, 1024};
  SimOptions opt;
  opt.seed = 2026;
  opt.n_paths = 100000;

  // MC case 1: singular example drift, indicator integrand
  const DriftSpec d1 = example_drift(0.25);
  std::vector<Integrand> ig1;
  ig1.push_back(
      {"f", [](double, double x) { return std::abs(x) <= 1.0 ? 1.0 : 0.0; }});
  {
    const DriftSpec d = d1;
    ig1.push_back(
        {"xi", [d](double t, double x) { return std::abs(d.eval(t, x)); }});
  }
  const PathEnsemble e1 = euler_maruyama(d1, sched, opt, ig1);
  const KrylovReport r1 = krylov_check(e1, kc, std::sqrt(2.0));

  // MC case 2: example drift plus a bounded bump; f is the reversed
  // singular magnitude itself
  DriftSpec d2 = example_drift(0.25);
  d2.b2.kind = DriftB2::Kind::gauss_bump;
  d2.b2.amplitude = 0.5;
  d2.b2.width = 1.0;
  std::vector<Integrand> ig2;
  {
    const DriftB1 b1 = *d2.b1;
    ig2.push_back(
        {"f", [b1](double t, double x) { return std::abs(b1.eval(t, x)); }});
    const DriftSpec d = d2;
    ig2.push_back(
        {"xi", [d](double t, double x) { return std::abs(d.eval(t, x)); }});
  }
  opt.seed = 2027;
  const PathEnsemble e2 = euler_maruyama(d2, sched, opt, ig2);
  const KrylovReport r2 =
      krylov_check(e2, kc, d2.b1->reversed_weighted_norm(kExps));
  const double elapsed = seconds_since(t0);

  report("krylov_estimate",
         analytic_ok && r1.pass && r2.pass && elapsed < kKrylovBudget,
         "analytic " + fmt(lhs_analytic) + "<=" + fmt(rhs_analytic) +
             "; mc1 lhs " + fmt(r1.lhs) + "<=rhs " + fmt(r1.rhs) +
             "; mc2 lhs " + fmt(r2.lhs) + "<=rhs " + fmt(r2.rhs) + " (" +
             fmt(elapsed) + "s)");
}

void crit_brownian_ou() {
  const StepSchedule sched{1.0, 1024};
  const double dt = 1.0 / 1024.0;
  SimOptions opt;
  opt.seed = 2028;
  opt.n_paths = 100000;

  const PathEnsemble bm = euler_maruyama(DriftSpec{}, sched, opt);
  const SummaryStats sb = summarize(bm.clean_terminal());
  const double var_b = sb.sd * sb.sd;
  const double var_se_b =
      var_b * std::sqrt(2.0 / (static_cast<double>(sb.n) - 1));
  const bool bm_ok = std::abs(sb.mean) <= 3.0 * sb.se &&
                     std::abs(var_b - 1.0) <= 3.0 * var_se_b;

  DriftSpec ou;
  ou.b2.kind = DriftB2::Kind::linear;
  ou.b2.value = 0.0;
  ou.b2.slope = -1.0;
  opt.seed = 2029;
  opt.x0 = 1.0;
  const PathEnsemble oe = euler_maruyama(ou, sched, opt);
  const SummaryStats so = summarize(oe.clean_terminal());
  const double mean_exact = std::exp(-1.0);
  const double var_exact = 0.5 * (1.0 - std::exp(-2.0));
  const double var_o = so.sd * so.sd;
  const double var_se_o =
      var_o * std::sqrt(2.0 / (static_cast<double>(so.n) - 1));
  const bool ou_ok =
      std::abs(so.mean - mean_exact) <= 3.0 * so.se + 4.0 * dt &&
      std::abs(var_o - var_exact) <= 3.0 * var_se_o + 4.0 * dt;

  report("brownian_ou_oracles", bm_ok && ou_ok,
         "bm mean " + fmt(sb.mean) + " var " + fmt(var_b) + "; ou mean " +
             fmt(so.mean) + " vs " + fmt(mean_exact) + " var " + fmt(var_o) +
             " vs " + fmt(var_exact));
}

void crit_zvonkin() {
  SigmaSpec sigma;
  sigma.kind = SigmaSpec::Kind::tanh_shift;
  sigma.base = 2.0;
  DriftSpec b;
  b.b2.kind = DriftB2::Kind::gauss_bump;
  b.b2.amplitude = 0.5;
  b.b2.width = 1.0;

  const ZvonkinMap map = build_phi_around(sigma, 0.0, 1.0);
  map.validate();  // monotone tables + bi-Lipschitz sandwich at every pair
  double roundtrip = 0.0;
  for (std::size_t i = 0; i < 4097; ++i) {
    const double x = map.lo + (map.hi - map.lo) * i / 4096.0;
    roundtrip = std::max(roundtrip, std::abs(map.psi_at(map.phi_at(x)) - x));
  }
  const bool map_ok = roundtrip <= kRoundTripTol;

  SimOptions opt;
  opt.n_paths = 20000;
  std::string detail =
      "roundtrip " + fmt(roundtrip) + " <= " + fmt(kRoundTripTol);
  bool routes_ok = true;
  for (std::size_t n_steps : {std::size_t{256}, std::size_t{1024}}) {
    const StepSchedule sched{1.0, n_steps};
    opt.seed = 2030 + n_steps;
    const RouteComparison rc =
        simulate_both_routes(b, sigma, 0.0, sched, opt);
    routes_ok = routes_ok && rc.pass;
    detail += "; ks@" + std::to_string(n_steps) + " " + fmt(rc.ks) +
              " floor " + fmt(rc.noise_floor);
  }
  report("zvonkin_route_equivalence", map_ok && routes_ok, detail);
}

void crit_feller() {
  const StepSchedule sched{1.0, 256};
  SimOptions opt;
  opt.seed = 2031;
  opt.n_paths = 20000;

  const DriftSpec drift = example_drift(0.25);
  const std::vector<double> xs{-0.2, -0.1, -0.05, 0.0, 0.05, 0.1, 0.2};
  const FellerTable t = feller_probe(drift, "indicator_neg", xs, sched, opt);
  const auto at = [&](double x) -> const FellerRow& {
    for (const auto& r : t.rows)
      if (r.x == x) return r;
    throw DomainError("probe row missing");
  };
  double se_max = 0.0;
  for (const auto& r : t.rows) se_max = std::max(se_max, r.se);
  const auto gap = [&](double s) {
    return std::max(std::abs(at(s).estimate - at(0.0).estimate),
                    std::abs(at(0.0).estimate - at(-s).estimate));
  };
  const double g20 = gap(0.2), g10 = gap(0.1), g05 = gap(0.05);
  const bool crn_ok =
      g10 <= g20 + 2.0 * se_max && g05 <= g10 + 2.0 * se_max;

  opt.seed = 2032;
  const FellerTable exact =
      feller_probe(DriftSpec{}, "indicator_neg", {0.0}, sched, opt);
  const double p0 = exact.rows[0].estimate;
  const bool exact_ok = std::abs(p0 - 0.5) <= 3.0 * exact.rows[0].se;

  report("strong_feller_probe", crn_ok && exact_ok,
         "gaps " + fmt(g20) + " -> " + fmt(g10) + " -> " + fmt(g05) +
             " (2se " + fmt(2.0 * se_max) + "); driftless P(X_1<=0) " +
             fmt(p0));
}

void crit_density() {
  const StepSchedule sched{1.0, 256};
  SimOptions opt;
  opt.seed = 2033;
  opt.n_paths = 100000;

  const PathEnsemble bm = euler_maruyama(DriftSpec{}, sched, opt);
  const DensityEstimate kb = kde(bm.clean_terminal(), 512);
  bool brownian_ok = true;
  std::string detail = "brownian lr:";
  for (double r : {1.0, 2.0, 3.0}) {
    const double exact = std::pow(2.0 * kPi, -(r - 1.0) / 2.0) / std::sqrt(r);
    const double got = lr_norm_proxy(kb, r);
    brownian_ok = brownian_ok && std::abs(got - exact) <= kDensityRel * exact;
    detail += " r=" + fmt(r) + ":" + fmt(got) + "/" + fmt(exact);
  }

  opt.seed = 2034;
  const PathEnsemble ex = euler_maruyama(example_drift(0.25), sched, opt);
  const auto sample = ex.clean_terminal();
  const DensityEstimate d512 = kde(sample, 512);
  const DensityEstimate d1024 = kde(sample, 1024);
  bool stable = true;
  detail += "; refinement:";
  for (double r : {1.0, 2.0, 3.0}) {
    const double a = lr_norm_proxy(d512, r), b = lr_norm_proxy(d1024, r);
    const double rel = std::abs(a - b) / b;
    stable = stable && rel <= kDensityRel;
    detail += " r=" + fmt(r) + ":" + fmt(rel);
  }
  report("density_integrability_proxy", brownian_ok && stable, detail);
}

}  // namespace

int main() {
  std::optional<MildSolution> gaussian_solution;
  criterion("counterexample_lower_bound", crit_counterexample);
  criterion("mollification_convergence", crit_mollification);
  criterion("explicit_constants", crit_constants);
  criterion("gradient_bound",
            [&] { gaussian_solution = crit_gradient_bound(); });
  criterion("duhamel_oracle", [&] { crit_duhamel(gaussian_solution); });
  criterion("krylov_estimate", crit_krylov);
  criterion("brownian_ou_oracles", crit_brownian_ou);
  criterion("zvonkin_route_equivalence", crit_zvonkin);
  criterion("strong_feller_probe", crit_feller);
  criterion("density_integrability_proxy", crit_density);

  if (g_failures == 0) {
    std::cout << "all acceptance criteria passed" << std::endl;
    return 0;
  }
  std::cout << g_failures << " acceptance criteria failed" << std::endl;
  return 1;
}
