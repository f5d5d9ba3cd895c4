#include "critsde/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <set>
#include <string>
#include <vector>

#include "critsde/drift.hpp"
#include "critsde/mild.hpp"
#include "critsde/quadrature.hpp"
#include "critsde/sde.hpp"
#include "critsde/spaces.hpp"
#include "critsde/special.hpp"
#include "critsde/stats.hpp"
#include "critsde/zvonkin.hpp"

namespace critsde {

namespace {

using nlohmann::json;
using io::Manifest;

std::string now_iso8601() {
  const std::time_t tt =
      std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&tt, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// Strict object reader: every key must be consumed, unknown keys are
// configuration errors with a dotted path in the message.
class JsonView {
 public:
  JsonView(const json& j, std::string ctx) : j_(&j), ctx_(std::move(ctx)) {
    if (!j_->is_object())
      throw ConfigError(ctx_ + ": expected a JSON object");
  }

  const std::string& context() const { return ctx_; }
  bool has(const std::string& key) const { return j_->contains(key); }

  const json& raw(const std::string& key) const {
    mark(key);
    return j_->at(key);
  }

  template <class T>
  T get(const std::string& key, const T& fallback) const {
    if (!has(key)) return fallback;
    mark(key);
    try {
      return j_->at(key).get<T>();
    } catch (const json::exception& e) {
      throw ConfigError(ctx_ + "." + key + ": " + e.what());
    }
  }

  template <class T>
  T require(const std::string& key) const {
    if (!has(key))
      throw ConfigError(ctx_ + ": missing required key '" + key + "'");
    return get<T>(key, T{});
  }

  void finish() const {
    for (const auto& item : j_->items())
      if (used_.find(item.key()) == used_.end())
        throw ConfigError(ctx_ + ": unknown key '" + item.key() + "'");
  }

 private:
  void mark(const std::string& key) const { used_.insert(key); }

  const json* j_;
  std::string ctx_;
  mutable std::set<std::string> used_;
};

// Re-badge validation failures of parsed objects as configuration errors so
// a malformed-but-parseable document still exits with the config status.
template <class T>
const T& validated(const T& obj, const std::string& ctx) {
  try {
    obj.validate();
  } catch (const DomainError& e) {
    throw ConfigError(ctx + ": " + e.what());
  }
  return obj;
}

SpatialProfile parse_profile(const json& j, const std::string& ctx) {
  const JsonView v(j, ctx);
  const auto kind = v.get<std::string>("kind", "gaussian_density");
  SpatialProfile prof;
  if (kind == "gaussian_density") {
    prof = gaussian_density_profile(v.get("sd", 1.0), v.get("center", 0.0));
    prof.amplitude *= v.get("amplitude", 1.0);
  } else if (kind == "gaussian") {
    prof.kind = SpatialProfile::Kind::gaussian;
    prof.amplitude = v.get("amplitude", 1.0);
    prof.width = v.get("sd", 1.0);
    prof.center = v.get("center", 0.0);
  } else if (kind == "indicator") {
    prof.kind = SpatialProfile::Kind::indicator;
    prof.amplitude = v.get("amplitude", 1.0);
    prof.width = v.get("width", 2.0);
    prof.center = v.get("center", 0.0);
  } else {
    throw ConfigError(ctx + ".kind: unknown profile '" + kind + "'");
  }
  v.finish();
  validated(prof, ctx);
  return prof;
}

TimeSingularity parse_time(const json& j, const std::string& ctx,
                           const ExponentPair& exps) {
  const JsonView v(j, ctx);
  const auto kind = v.get<std::string>("kind", "example");
  TimeSingularity ts;
  ts.horizon = exps.T;
  ts.q = exps.q;
  if (kind == "constant") {
    ts.kind = TimeSingularity::Kind::constant;
  } else if (kind == "example") {
    ts.kind = TimeSingularity::Kind::reversed_example;
  } else if (kind == "power") {
    ts.kind = TimeSingularity::Kind::reversed_power;
    ts.beta = v.get("beta", 1.0 / exps.q);
  } else {
    throw ConfigError(ctx + ".kind: unknown time factor '" + kind + "'");
  }
  v.finish();
  validated(ts, ctx);
  return ts;
}

DriftB1 parse_b1(const json& j, const std::string& ctx,
                 const ExponentPair& exps,
                 const std::string& default_time_kind) {
  const JsonView v(j, ctx);
  DriftB1 b1;
  if (v.has("time")) {
    b1.time = parse_time(v.raw("time"), ctx + ".time", exps);
  } else {
    b1.time = parse_time(json{{"kind", default_time_kind}}, ctx + ".time", exps);
  }
  b1.profile = v.has("profile")
                   ? parse_profile(v.raw("profile"), ctx + ".profile")
                   : gaussian_density_profile();
  const double target = v.get("scale_to_norm", 0.0);
  v.finish();
  if (target > 0.0) {
    const double cur = b1.reversed_weighted_norm(exps);
    if (!(cur > 0.0) || !std::isfinite(cur))
      throw ConfigError(ctx + ".scale_to_norm: profile norm is degenerate");
    b1.profile.amplitude *= target / cur;
  }
  validated(b1, ctx);
  return b1;
}

DriftB2 parse_b2(const json& j, const std::string& ctx) {
  const JsonView v(j, ctx);
  const auto kind = v.get<std::string>("kind", "zero");
  DriftB2 b2;
  if (kind == "zero") {
    b2.kind = DriftB2::Kind::zero;
  } else if (kind == "constant") {
    b2.kind = DriftB2::Kind::constant;
    b2.value = v.get("value", 0.0);
  } else if (kind == "linear") {
    b2.kind = DriftB2::Kind::linear;
    b2.value = v.get("value", 0.0);
    b2.slope = v.get("slope", -1.0);
  } else if (kind == "bump") {
    b2.kind = DriftB2::Kind::gauss_bump;
    b2.amplitude = v.get("amplitude", 0.5);
    b2.center = v.get("center", 0.0);
    b2.width = v.get("width", 1.0);
  } else {
    throw ConfigError(ctx + ".kind: unknown bounded drift '" + kind + "'");
  }
  v.finish();
  validated(b2, ctx);
  return b2;
}

DriftSpec parse_drift(const json& j, const std::string& ctx,
                      const ExponentPair& exps) {
  const JsonView v(j, ctx);
  DriftSpec spec;
  spec.horizon = exps.T;
  if (v.has("b1")) spec.b1 = parse_b1(v.raw("b1"), ctx + ".b1", exps, "example");
  if (v.has("b2")) spec.b2 = parse_b2(v.raw("b2"), ctx + ".b2");
  v.finish();
  validated(spec, ctx);
  return spec;
}

SigmaSpec parse_sigma(const json& j, const std::string& ctx) {
  const JsonView v(j, ctx);
  const auto kind = v.get<std::string>("kind", "tanh_shift");
  SigmaSpec sg;
  if (kind == "constant") {
    sg.kind = SigmaSpec::Kind::constant;
    sg.base = v.get("base", 1.0);
  } else if (kind == "affine") {
    sg.kind = SigmaSpec::Kind::affine;
    sg.base = v.get("base", 2.0);
    sg.slope = v.get("slope", 0.1);
  } else if (kind == "tanh_shift") {
    sg.kind = SigmaSpec::Kind::tanh_shift;
    sg.base = v.get("base", 2.0);
    sg.center = v.get("center", 0.0);
  } else {
    throw ConfigError(ctx + ".kind: unknown sigma '" + kind + "'");
  }
  v.finish();
  validated(sg, ctx);
  return sg;
}

SpatialGrid parse_grid(const JsonView& p, double def_L, std::size_t def_n) {
  SpatialGrid grid{def_L, def_n};
  if (p.has("grid")) {
    const JsonView g(p.raw("grid"), p.context() + ".grid");
    grid.L = g.get("L", def_L);
    grid.n_points = g.get<std::size_t>("n_points", def_n);
    g.finish();
  }
  validated(grid, p.context() + ".grid");
  return grid;
}

struct SimKnobs {
  StepSchedule sched;
  SimOptions opt;
};

SimKnobs parse_sim(const JsonView& p, const ExperimentConfig& cfg,
                   std::size_t def_paths, std::size_t def_steps) {
  SimKnobs k;
  k.sched.horizon = cfg.exps.T;
  k.sched.n_steps = p.get<std::size_t>("n_steps", def_steps);
  k.sched.freeze_frac = p.get("freeze_frac", 0.0);
  validated(k.sched, p.context());
  k.opt.seed = cfg.seed;
  k.opt.workers = cfg.workers;
  k.opt.n_paths = p.get<std::size_t>("n_paths", def_paths);
  k.opt.x0 = p.get("x0", 0.0);
  if (k.opt.n_paths == 0) throw ConfigError("params.n_paths: must be positive");
  return k;
}

Manifest fresh_manifest(const ExperimentConfig& cfg) {
  Manifest man;
  man.experiment = cfg.experiment;
  man.timestamp = now_iso8601();
  return man;
}

void write_report_json(const std::filesystem::path& out_dir, Manifest& man,
                       const json& body) {
  io::write_text(out_dir / "report.json", body.dump(2) + "\n");
  man.add_file(out_dir, "report.json", "report");
}

// ---------------------------------------------------------------------------
// pde-solve
// ---------------------------------------------------------------------------

Manifest run_pde_solve(const ExperimentConfig& cfg) {
  const JsonView p(cfg.params, "params");
  Manifest man = fresh_manifest(cfg);
  const auto& out = cfg.out_dir;

  const SpatialGrid grid = parse_grid(p, 12.0, 1025);
  SolverOptions sopt;
  sopt.tol = p.get("tol", 1e-8);
  sopt.max_iter = p.get<int>("max_iter", 60);
  sopt.gl_nodes = p.get<int>("gl_nodes", 64);
  sopt.strict = cfg.strict;
  const std::string mode = p.get<std::string>("mode", "generic");

  const KernelConstants kc = compute_constants(cfg.exps);
  io::write_constants_json(out / "constants.json", cfg.exps, kc);
  man.add_file(out, "constants.json", "constants");
  man.summary["c0"] = kc.c0;
  man.summary["c_grad"] = kc.c_grad;
  man.summary["theta"] = kc.theta;

  if (mode == "transform") {
    const json gj = p.has("g") ? p.raw("g") : json::object();
    p.finish();
    const DriftB1 g = parse_b1(gj, "params.g", cfg.exps, "example");
    const double gnorm = g.reversed_weighted_norm(cfg.exps);
    const double threshold = 0.5 / kc.c0;
    man.summary["g_weighted_norm"] = gnorm;
    man.add_check("smallness_condition", gnorm < threshold, gnorm, threshold);
    if (!(gnorm < threshold)) {
      man.notes.push_back(
          "smallness violated: reversed drift norm exceeds 1/(2 c0); "
          "transform refused");
      return man;
    }
    const ReversedDriftSliceFn slices(g, grid);
    const TransformSolution ts =
        solve_transform_pde(slices, cfg.exps, grid, sopt);
    man.add_check("converged", ts.U.residual <= sopt.tol, ts.U.residual,
                  sopt.tol);
    man.add_check("grad_phi_bounds", ts.grad_phi_in_bounds, ts.delta, 0.0);
    man.add_check("psi_slope_bounds", ts.psi_slope_in_bounds, ts.delta, 0.0);
    man.summary["delta"] = ts.delta;
    man.summary["iterations"] = static_cast<double>(ts.U.iterations);
    man.summary["contraction_ratio"] = ts.U.contraction_ratio;

    SpaceTimeField uf(ts.U.times, cfg.exps.T, grid);
    uf.values = ts.U.u;
    io::write_field_csv(out / "transform_u.csv", uf);
    man.add_file(out, "transform_u.csv", "field");
    return man;
  }
  if (mode != "generic")
    throw ConfigError("params.mode: expected 'generic' or 'transform'");

  const json fj = p.has("f") ? p.raw("f") : json{{"time", {{"kind", "constant"}}}};
  const DriftB1 f = parse_b1(fj, "params.f", cfg.exps, "constant");
  const ReversedDriftSliceFn f_slices(f, grid);

  std::optional<DriftB1> g;
  std::optional<ReversedDriftSliceFn> g_slices;
  if (p.has("g")) {
    g = parse_b1(p.raw("g"), "params.g", cfg.exps, "constant");
    g_slices.emplace(*g, grid);
  }

  const bool want_probe = p.get("probe", true);
  const double probe_t = p.get("probe_t", cfg.exps.T);
  const double probe_x = p.get("probe_x", 0.0);
  p.finish();

  if (g) {
    const double gnorm = g->reversed_weighted_norm(cfg.exps);
    man.summary["g_weighted_norm"] = gnorm;
    man.add_check("picard_contraction_condition", kc.c0 * gnorm < 1.0,
                  kc.c0 * gnorm, 1.0);
    if (!(kc.c0 * gnorm < 1.0)) {
      man.notes.push_back(
          "smallness violated: c0 ||g|| >= 1, Picard iteration refused");
      return man;
    }
  }

  const MildSolution sol =
      solve_mild(f_slices, g_slices ? &*g_slices : nullptr, cfg.exps, grid,
                 sopt);
  man.add_check("converged", sol.residual <= sopt.tol, sol.residual, sopt.tol);
  man.summary["iterations"] = static_cast<double>(sol.iterations);
  man.summary["contraction_ratio"] = sol.contraction_ratio;
  man.summary["f_weighted_norm"] = sol.f_weighted_norm;
  man.summary["sup_u"] = sol.sup_u;
  man.summary["sup_grad_u"] = sol.sup_grad;

  const GradientBoundReport gb = check_gradient_bound(sol);
  man.add_check("gradient_bound", gb.pass, gb.sup_grad,
                gb.rhs_grad * (1.0 + gb.slack));
  man.add_check("w1inf_bound", gb.lhs_w1inf <= gb.rhs_w1inf * (1.0 + gb.slack),
                gb.lhs_w1inf, gb.rhs_w1inf * (1.0 + gb.slack));

  const HolderReport hr =
      time_holder_check(sol, f_slices, g_slices ? &*g_slices : nullptr);
  if (hr.applicable) {
    man.add_check("holder_slope", hr.pass, hr.slope, 0.5 * hr.theta - 0.1);
    man.summary["holder_slope"] = hr.slope;
  }

  if (want_probe) {
    const MildSlices probe = eval_mild_at(
        sol, f_slices, g_slices ? &*g_slices : nullptr, probe_t);
    const std::size_t xi = grid.index_of(probe_x);
    man.summary["u_probe"] = probe.u[xi];
    man.summary["grad_u_probe"] = probe.grad_u[xi];
  }

  SpaceTimeField uf(sol.times, cfg.exps.T, grid);
  uf.values = sol.u;
  io::write_field_csv(out / "solution_u.csv", uf);
  man.add_file(out, "solution_u.csv", "field");
  SpaceTimeField gf(sol.times, cfg.exps.T, grid);
  gf.values = sol.grad_u;
  io::write_field_csv(out / "solution_grad.csv", gf);
  man.add_file(out, "solution_grad.csv", "field");

  // Per-time profile table: weighted L^p norm of u and sup norms.
  std::vector<double> ts, wu, su, sg2;
  for (std::size_t ti = 0; ti < sol.times.size(); ++ti) {
    if (sol.times[ti] <= 0.0) continue;
    const auto us = sol.u_slice(ti);
    const auto gs = sol.grad_slice(ti);
    ts.push_back(sol.times[ti]);
    wu.push_back(std::pow(sol.times[ti], 1.0 / cfg.exps.q) *
                 lp_norm(us, grid.h(), cfg.exps.p));
    double a = 0.0, b = 0.0;
    for (double v : us) a = std::max(a, std::abs(v));
    for (double v : gs) b = std::max(b, std::abs(v));
    su.push_back(a);
    sg2.push_back(b);
  }
  io::write_columns_csv(out / "solution_profile.csv",
                        {"t", "weighted_u", "sup_u", "sup_grad"},
                        {ts, wu, su, sg2});
  man.add_file(out, "solution_profile.csv", "table");
  return man;
}

// ---------------------------------------------------------------------------
// krylov-check
// ---------------------------------------------------------------------------

Manifest run_krylov_check(const ExperimentConfig& cfg) {
  const JsonView p(cfg.params, "params");
  Manifest man = fresh_manifest(cfg);
  const auto& out = cfg.out_dir;

  const KernelConstants kc = compute_constants(cfg.exps);
  const json dj = p.has("drift") ? p.raw("drift") : json::object();
  const DriftSpec drift = parse_drift(dj, "params.drift", cfg.exps);

  const json fj = p.has("f") ? p.raw("f") : json{{"kind", "indicator"}};
  const JsonView fv(fj, "params.f");
  const auto f_kind = fv.get<std::string>("kind", "indicator");

  ScalarField2 f_fn;
  double rnorm = 0.0;
  bool analytic_possible = false;
  double half_width = 1.0, f_amp = 1.0;
  if (f_kind == "indicator") {
    half_width = fv.get("half_width", 1.0);
    f_amp = fv.get("amplitude", 1.0);
    if (!(half_width > 0.0))
      throw ConfigError("params.f.half_width: must be positive");
    f_fn = [half_width, f_amp](double, double x) {
      return std::abs(x) <= half_width ? f_amp : 0.0;
    };
    rnorm = f_amp * std::pow(2.0 * half_width, 1.0 / cfg.exps.p) *
            std::pow(cfg.exps.T, 1.0 / cfg.exps.q);
    analytic_possible = !drift.b1 && drift.b2.kind == DriftB2::Kind::zero;
  } else if (f_kind == "drift_magnitude") {
    if (!drift.b1)
      throw ConfigError(
          "params.f: drift_magnitude needs a drift with a singular part");
    const DriftB1 b1 = *drift.b1;
    f_fn = [b1](double t, double x) { return std::abs(b1.eval(t, x)); };
    rnorm = b1.reversed_weighted_norm(cfg.exps);
  } else {
    throw ConfigError("params.f.kind: unknown test function '" + f_kind + "'");
  }
  fv.finish();

  const SimKnobs k = parse_sim(p, cfg, 20000, 256);
  p.finish();

  if (drift.b1) {
    const double bnorm = drift.b1->reversed_weighted_norm(cfg.exps);
    man.summary["drift_reversed_norm"] = bnorm;
    man.summary["smallness_threshold"] = 0.5 / kc.c0;
    if (bnorm >= 0.5 / kc.c0)
      man.notes.push_back(
          "drift norm exceeds the smallness threshold; the one-sided bound "
          "is not guaranteed in this regime");
  }

  const DriftSpec local = drift;
  const std::vector<Integrand> integrands = {
      {"f", f_fn},
      {"xi", [local](double t, double x) { return std::abs(local.eval(t, x)); }},
  };
  const PathEnsemble ens = euler_maruyama(drift, k.sched, k.opt, integrands);
  const KrylovReport rep = krylov_check(ens, kc, rnorm);

  man.add_check("krylov_mc", rep.pass, rep.lhs, rep.rhs + 2.0 * rep.lhs_se);
  man.add_check("exclusion_rate", ens.exclusion_rate() <= 0.01,
                ens.exclusion_rate(), 0.01);
  man.summary["lhs_mc"] = rep.lhs;
  man.summary["lhs_se"] = rep.lhs_se;
  man.summary["xi_mean"] = rep.xi_mean;
  man.summary["rhs"] = rep.rhs;
  man.summary["reversed_norm"] = rnorm;
  man.summary["c0"] = kc.c0;

  json rj;
  rj["lhs_mc"] = rep.lhs;
  rj["lhs_se"] = rep.lhs_se;
  rj["xi_mean"] = rep.xi_mean;
  rj["xi_se"] = rep.xi_se;
  rj["rhs"] = rep.rhs;
  rj["c0"] = rep.c0;
  rj["reversed_weighted_norm"] = rep.reversed_norm;
  rj["n_used"] = rep.n_used;
  rj["pass"] = rep.pass;

  if (analytic_possible) {
    const double lhs_exact = f_amp * brownian_indicator_lhs(half_width, cfg.exps.T);
    const double rhs_exact = kc.c0 * rnorm;  // xi vanishes for zero drift
    man.add_check("krylov_analytic", lhs_exact <= rhs_exact, lhs_exact,
                  rhs_exact);
    man.summary["lhs_analytic"] = lhs_exact;
    rj["lhs_analytic"] = lhs_exact;
    rj["rhs_analytic"] = rhs_exact;
  }
  write_report_json(out, man, rj);

  for (const auto& rel : io::write_ensemble(out, "ensemble", ens))
    man.add_file(out, rel,
                 rel.size() > 5 && rel.substr(rel.size() - 5) == ".json"
                     ? "ensemble-header"
                     : "ensemble-shard");
  return man;
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

Manifest run_simulate(const ExperimentConfig& cfg) {
  const JsonView p(cfg.params, "params");
  Manifest man = fresh_manifest(cfg);
  const auto& out = cfg.out_dir;

  const json dj = p.has("drift") ? p.raw("drift") : json::object();
  const DriftSpec drift = parse_drift(dj, "params.drift", cfg.exps);
  std::optional<SigmaSpec> sigma;
  if (p.has("sigma")) sigma = parse_sigma(p.raw("sigma"), "params.sigma");

  SimKnobs k = parse_sim(p, cfg, 20000, 256);
  const double T = cfg.exps.T;

  std::vector<double> gaps;
  double anchor = 0.5 * T;
  const bool want_modulus = p.get("modulus", true);
  if (want_modulus) {
    anchor = p.get("anchor", 0.5 * T);
    gaps = p.get<std::vector<double>>(
        "gaps", {T / 2.0, T / 4.0, T / 8.0, T / 16.0, T / 32.0});
    for (double g : gaps)
      if (!(g > 0.0) || anchor + g > T + 1e-12)
        throw ConfigError("params.gaps: anchor + gap must stay within [0, T]");
    k.opt.record_times.push_back(anchor);
    for (double g : gaps) k.opt.record_times.push_back(anchor + g);
  }
  for (double rt : p.get<std::vector<double>>("record", {}))
    k.opt.record_times.push_back(rt);

  const bool pure_brownian =
      !drift.b1 && drift.b2.kind == DriftB2::Kind::zero && !sigma;
  k.opt.track_autocorr = p.get("autocorr", pure_brownian);

  ScalarField2 sigma_fn;
  if (sigma) {
    const SigmaSpec sg = *sigma;
    sigma_fn = [sg](double, double x) { return sg.eval(x); };
  }

  const json mollify_j = p.has("mollify") ? p.raw("mollify") : json();
  p.finish();

  const PathEnsemble ens =
      euler_maruyama(drift, k.sched, k.opt, {}, sigma_fn);
  man.add_check("exclusion_rate", ens.exclusion_rate() <= 0.01,
                ens.exclusion_rate(), 0.01);

  const SummaryStats st = summarize(ens.clean_terminal());
  man.summary["terminal_mean"] = st.mean;
  man.summary["terminal_sd"] = st.sd;
  man.summary["terminal_se"] = st.se;

  const double dt = T / static_cast<double>(k.sched.n_steps);
  const double var = st.sd * st.sd;
  const double var_se = var * std::sqrt(2.0 / static_cast<double>(st.n - 1));

  // Closed-form terminal oracles for the classical members of the catalog.
  if (!drift.b1 && !sigma) {
    if (drift.b2.kind == DriftB2::Kind::zero) {
      man.add_check("brownian_mean", std::abs(st.mean - k.opt.x0) <= 3.0 * st.se,
                    st.mean - k.opt.x0, 3.0 * st.se);
      man.add_check("brownian_var", std::abs(var - T) <= 3.0 * var_se, var - T,
                    3.0 * var_se);
      const double ac_tol =
          3.0 / std::sqrt(static_cast<double>(k.opt.n_paths) *
                          static_cast<double>(k.sched.n_steps));
      if (k.opt.track_autocorr)
        man.add_check("increment_autocorr",
                      std::abs(ens.autocorr_lag1) <= ac_tol, ens.autocorr_lag1,
                      ac_tol);
    } else if (drift.b2.kind == DriftB2::Kind::constant) {
      const double target = k.opt.x0 + drift.b2.value * T;
      man.add_check("constant_drift_mean",
                    std::abs(st.mean - target) <= 3.0 * st.se, st.mean - target,
                    3.0 * st.se);
    } else if (drift.b2.kind == DriftB2::Kind::linear &&
               drift.b2.slope != 0.0) {
      const double m = drift.b2.slope;
      const double a = drift.b2.value;
      const double emt = std::exp(m * T);
      const double mean_exact = k.opt.x0 * emt + (a / m) * (emt - 1.0);
      const double var_exact = (std::exp(2.0 * m * T) - 1.0) / (2.0 * m);
      const double mean_allow =
          3.0 * st.se + 2.0 * dt * (std::abs(k.opt.x0) + std::abs(a) + 1.0);
      const double var_allow = 3.0 * var_se + 3.0 * dt;
      man.add_check("ou_mean", std::abs(st.mean - mean_exact) <= mean_allow,
                    st.mean - mean_exact, mean_allow);
      man.add_check("ou_var", std::abs(var - var_exact) <= var_allow,
                    var - var_exact, var_allow);
    }
  }

  if (want_modulus) {
    const double theta =
        drift.b1 ? compute_constants(cfg.exps).theta : 1.0;
    const ModulusReport mr = increment_modulus(ens, gaps, theta);
    man.add_check("modulus_slope", mr.pass, mr.slope, 0.5 * theta - 0.1);
    if (pure_brownian)
      man.add_check("modulus_brownian", std::abs(mr.slope - 0.5) <= 0.05,
                    mr.slope, 0.5);
    man.summary["fit_slope"] = mr.slope;
    io::write_columns_csv(out / "modulus.csv", {"gap", "modulus", "stderr"},
                          {mr.gaps, mr.moduli, mr.moduli_se});
    man.add_file(out, "modulus.csv", "loglog-table");
  }

  if (mollify_j.is_object() && drift.b1) {
    const JsonView mv(mollify_j, "params.mollify");
    const auto n_list = mv.get<std::vector<int>>("n_list", {4, 16, 64});
    if (n_list.empty()) throw ConfigError("params.mollify.n_list: empty");
    // Default resolution tracks the finest mollifier: h <= 1/(2 max n).
    const double L = mv.get("L", 12.0);
    const int max_n = *std::max_element(n_list.begin(), n_list.end());
    const auto def_points = static_cast<std::size_t>(
        std::ceil(4.0 * L * static_cast<double>(max_n))) + 1;
    SpatialGrid mgrid{L, mv.get<std::size_t>("n_points", def_points)};
    mv.finish();
    const MollifiedDriftTable table = mollified_drift_convergence(
        drift, n_list, k.sched, k.opt, mgrid, cfg.exps);
    bool norm_dec = true, ks_ok = true;
    for (std::size_t i = 0; i + 1 < table.rows.size(); ++i) {
      norm_dec = norm_dec && table.rows[i + 1].drift_norm_error <
                                 table.rows[i].drift_norm_error;
      ks_ok = ks_ok && table.rows[i + 1].ks_to_exact <=
                           1.1 * table.rows[i].ks_to_exact + 1e-12;
    }
    man.add_check("mollified_norm_decreasing", norm_dec,
                  table.rows.back().drift_norm_error,
                  table.rows.front().drift_norm_error);
    man.add_check("mollified_ks_nonincreasing", ks_ok,
                  table.rows.back().ks_to_exact,
                  1.1 * table.rows.front().ks_to_exact);
    man.add_check("mollified_ks_floor",
                  table.rows.back().ks_to_exact <= 2.0 * table.noise_floor,
                  table.rows.back().ks_to_exact, 2.0 * table.noise_floor);
    man.summary["mollified_noise_floor"] = table.noise_floor;
    std::vector<double> ns, errs, kss;
    for (const auto& r : table.rows) {
      ns.push_back(static_cast<double>(r.n));
      errs.push_back(r.drift_norm_error);
      kss.push_back(r.ks_to_exact);
    }
    io::write_columns_csv(out / "mollified_drift.csv",
                          {"n", "drift_norm_error", "ks_to_exact"},
                          {ns, errs, kss});
    man.add_file(out, "mollified_drift.csv", "loglog-table");
  } else if (mollify_j.is_object()) {
    throw ConfigError("params.mollify: drift has no singular part to mollify");
  }

  json rj;
  rj["terminal_mean"] = st.mean;
  rj["terminal_sd"] = st.sd;
  rj["n_paths"] = k.opt.n_paths;
  rj["n_steps"] = k.sched.n_steps;
  rj["excluded"] = ens.n_excluded();
  write_report_json(out, man, rj);
  for (const auto& rel : io::write_ensemble(out, "ensemble", ens))
    man.add_file(out, rel,
                 rel.size() > 5 && rel.substr(rel.size() - 5) == ".json"
                     ? "ensemble-header"
                     : "ensemble-shard");
  return man;
}

// ---------------------------------------------------------------------------
// zvonkin-compare
// ---------------------------------------------------------------------------

Manifest run_zvonkin_compare(const ExperimentConfig& cfg) {
  const JsonView p(cfg.params, "params");
  Manifest man = fresh_manifest(cfg);
  const auto& out = cfg.out_dir;

  const json sj = p.has("sigma") ? p.raw("sigma") : json{{"kind", "tanh_shift"}};
  const SigmaSpec sigma = parse_sigma(sj, "params.sigma");
  const json dj = p.has("drift")
                      ? p.raw("drift")
                      : json{{"b2", {{"kind", "bump"}, {"amplitude", 0.5}}}};
  const DriftSpec drift = parse_drift(dj, "params.drift", cfg.exps);

  const double x0 = p.get("x0", 0.0);
  const std::size_t n_paths = p.get<std::size_t>("n_paths", 20000);
  const auto steps_list =
      p.get<std::vector<std::size_t>>("n_steps", {256, 1024});
  const double floor_ratio = p.get("floor_ratio", 1.5);
  const auto n_nodes =
      p.get<std::size_t>("n_nodes", (std::size_t{1} << 14) + 1);
  const double roundtrip_tol = p.get("roundtrip_tol", 1e-6);
  p.finish();

  const ZvonkinMap map = build_phi_around(sigma, x0, cfg.exps.T, n_nodes);
  man.summary["delta1"] = map.delta1;
  man.summary["delta2"] = map.delta2;

  double rt_err = 0.0, pp_err = 0.0;
  const std::size_t n_probe = 4097;
  for (std::size_t i = 0; i < n_probe; ++i) {
    const double x = map.lo + (map.hi - map.lo) * static_cast<double>(i) /
                                 static_cast<double>(n_probe - 1);
    rt_err = std::max(rt_err, std::abs(map.psi_at(map.phi_at(x)) - x));
    pp_err =
        std::max(pp_err, std::abs(map.phi_prime_at(x) * sigma.eval(x) - 1.0));
  }
  man.add_check("roundtrip", rt_err <= roundtrip_tol, rt_err, roundtrip_tol);
  man.add_check("phi_prime_identity", pp_err <= 1e-8, pp_err, 1e-8);

  double sandwich_slack = std::numeric_limits<double>::infinity();
  const double dx = (map.x_nodes.back() - map.x_nodes.front()) /
                    static_cast<double>(map.x_nodes.size() - 1);
  for (std::size_t i = 0; i + 1 < map.x_nodes.size(); ++i) {
    const double dphi = map.phi[i + 1] - map.phi[i];
    sandwich_slack = std::min(sandwich_slack,
                              std::min(dphi - dx / map.delta2,
                                       dx / map.delta1 - dphi));
  }
  man.add_check("bi_lipschitz_sandwich",
                sandwich_slack >= -1e-12 * dx / map.delta1, sandwich_slack,
                0.0);

  if (drift.b1) {
    const double bound =
        transformed_singular_norm_bound(drift, map, cfg.exps);
    const double threshold = 0.5 / compute_constants(cfg.exps).c0;
    man.summary["transformed_singular_norm_bound"] = bound;
    man.summary["smallness_threshold"] = threshold;
    man.notes.push_back(bound < threshold
                            ? "transformed singular norm bound sits below the "
                              "smallness threshold"
                            : "transformed singular norm bound exceeds the "
                              "smallness threshold; reported, not asserted");
  }

  json rj;
  rj["delta1"] = map.delta1;
  rj["delta2"] = map.delta2;
  rj["roundtrip_error"] = rt_err;
  for (std::size_t n_steps : steps_list) {
    StepSchedule sched;
    sched.horizon = cfg.exps.T;
    sched.n_steps = n_steps;
    SimOptions opt;
    opt.seed = cfg.seed;
    opt.workers = cfg.workers;
    opt.n_paths = n_paths;
    const RouteComparison cmp =
        simulate_both_routes(drift, sigma, x0, sched, opt, floor_ratio);
    const std::string tag = std::to_string(n_steps);
    man.add_check("route_ks_" + tag, cmp.pass, cmp.ks,
                  floor_ratio * cmp.noise_floor);
    man.summary["ks_" + tag] = cmp.ks;
    man.summary["noise_floor_" + tag] = cmp.noise_floor;
    rj["ks_" + tag] = cmp.ks;
    rj["noise_floor_" + tag] = cmp.noise_floor;
    rj["direct_excluded_" + tag] = cmp.direct.n_excluded();
    rj["transformed_excluded_" + tag] = cmp.transformed.n_excluded();

    io::write_columns_csv(out / ("terminal_direct_" + tag + ".csv"), {"x"},
                          {cmp.direct.clean_terminal()});
    man.add_file(out, "terminal_direct_" + tag + ".csv", "samples");
    io::write_columns_csv(out / ("terminal_mapped_" + tag + ".csv"), {"x"},
                          {cmp.mapped_terminal});
    man.add_file(out, "terminal_mapped_" + tag + ".csv", "samples");
  }
  write_report_json(out, man, rj);

  io::write_map_csv(out / "map.csv", map);
  man.add_file(out, "map.csv", "map");
  return man;
}

// ---------------------------------------------------------------------------
// mollify-demo
// ---------------------------------------------------------------------------

Manifest run_mollify_demo(const ExperimentConfig& cfg) {
  const JsonView p(cfg.params, "params");
  Manifest man = fresh_manifest(cfg);
  const auto& out = cfg.out_dir;

  const std::string field_kind =
      p.get<std::string>("field", "weighted_gaussian");
  const auto n_list = p.get<std::vector<int>>("n_list", {4, 16, 64, 256});
  const SpatialGrid grid = parse_grid(p, 12.0, 24577);
  const auto n_times = p.get<std::size_t>("n_times", 40);
  const double final_tol = p.get("final_tol", 1e-2);
  p.finish();
  if (n_list.size() < 2)
    throw ConfigError("params.n_list: need at least two scales");

  // Log-spaced times in (1e-3 T, T]; the weighted error of the catalog
  // fields is monotone enough in t for the sup to be seen on this range.
  std::vector<double> times(n_times);
  for (std::size_t j = 0; j < n_times; ++j)
    times[j] = cfg.exps.T *
               std::pow(10.0, -3.0 * (1.0 - static_cast<double>(j) /
                                                static_cast<double>(n_times - 1)));

  DriftB1 b1;
  b1.time.horizon = cfg.exps.T;
  b1.time.q = cfg.exps.q;
  if (field_kind == "weighted_gaussian") {
    b1.time.kind = TimeSingularity::Kind::reversed_power;
    b1.time.beta = 1.0 / cfg.exps.q;
  } else if (field_kind == "gaussian") {
    b1.time.kind = TimeSingularity::Kind::constant;
  } else if (field_kind == "example") {
    b1.time.kind = TimeSingularity::Kind::reversed_example;
  } else {
    throw ConfigError("params.field: unknown field '" + field_kind + "'");
  }
  b1.profile = gaussian_density_profile();

  const SpaceTimeField field = sample_reversed_drift(b1, grid, times);
  const MollificationProfile prof =
      mollification_profile(field, cfg.exps, n_list);

  bool decreasing = true;
  for (std::size_t i = 0; i + 1 < prof.errors.size(); ++i)
    decreasing = decreasing && prof.errors[i + 1] < prof.errors[i];
  man.add_check("errors_strictly_decreasing", decreasing, prof.errors.back(),
                prof.errors.front());
  man.add_check("final_error", prof.errors.back() < final_tol,
                prof.errors.back(), final_tol);
  man.summary["fit_slope"] = prof.slope;

  std::vector<double> ns, errs;
  for (std::size_t i = 0; i < prof.n_list.size(); ++i) {
    ns.push_back(static_cast<double>(prof.n_list[i]));
    errs.push_back(prof.errors[i]);
  }
  io::write_columns_csv(out / "mollify_decay.csv", {"n", "weighted_error"},
                        {ns, errs});
  man.add_file(out, "mollify_decay.csv", "loglog-table");
  return man;
}

// ---------------------------------------------------------------------------
// counterexample
// ---------------------------------------------------------------------------

Manifest run_counterexample(const ExperimentConfig& cfg) {
  const JsonView p(cfg.params, "params");
  Manifest man = fresh_manifest(cfg);
  const auto& out = cfg.out_dir;

  const int k_max = p.get<int>("k_max", 32);
  const auto n_list = p.get<std::vector<int>>("n_list", {4, 8, 16});
  const double bound = p.get("bound", 0.23);
  const double h =
      p.get("h", 1.0 / (4.0 * static_cast<double>(k_max) *
                        static_cast<double>(k_max)));
  const double L = p.get("L", static_cast<double>(k_max) + 2.0);
  p.finish();

  const SpaceTimeField field = counterexample_field(k_max, h, L);
  const CounterexampleCheck chk = counterexample_check(field, n_list);

  std::vector<double> ns, worst, which;
  for (std::size_t i = 0; i < chk.n_list.size(); ++i) {
    ns.push_back(static_cast<double>(chk.n_list[i]));
    worst.push_back(chk.worst_sq_error[i]);
    which.push_back(static_cast<double>(chk.worst_k[i]));
    man.add_check("lower_bound_n" + std::to_string(chk.n_list[i]),
                  chk.worst_sq_error[i] >= bound, chk.worst_sq_error[i], bound);
  }
  io::write_columns_csv(out / "lower_bound.csv",
                        {"n", "worst_sq_error", "worst_k"},
                        {ns, worst, which});
  man.add_file(out, "lower_bound.csv", "table");
  return man;
}

// ---------------------------------------------------------------------------
// feller-probe
// ---------------------------------------------------------------------------

Manifest run_feller_probe(const ExperimentConfig& cfg) {
  const JsonView p(cfg.params, "params");
  Manifest man = fresh_manifest(cfg);
  const auto& out = cfg.out_dir;

  const json dj = p.has("drift")
                      ? p.raw("drift")
                      : json{{"b1",
                              {{"profile",
                                {{"kind", "gaussian_density"},
                                 {"amplitude", 0.25}}}}}};
  const DriftSpec drift = parse_drift(dj, "params.drift", cfg.exps);
  const auto test_fn = p.get<std::string>("test_fn", "indicator_neg");
  const double center = p.get("center", 0.0);
  const auto spacings =
      p.get<std::vector<double>>("spacings", {0.2, 0.1, 0.05});
  const SimKnobs k = parse_sim(p, cfg, 20000, 256);
  p.finish();
  if (spacings.size() < 2)
    throw ConfigError("params.spacings: need at least two spacings");
  for (std::size_t i = 0; i + 1 < spacings.size(); ++i)
    if (!(spacings[i] > spacings[i + 1]) || !(spacings[i + 1] > 0.0))
      throw ConfigError("params.spacings: must be positive and decreasing");

  std::vector<double> x_list{center};
  for (double s : spacings) {
    x_list.push_back(center - s);
    x_list.push_back(center + s);
  }
  std::sort(x_list.begin(), x_list.end());
  x_list.erase(std::unique(x_list.begin(), x_list.end()), x_list.end());

  const FellerTable table =
      feller_probe(drift, test_fn, x_list, k.sched, k.opt);
  const auto estimate_at = [&](double x) -> const FellerRow& {
    for (const auto& row : table.rows)
      if (std::abs(row.x - x) < 1e-12) return row;
    throw DataError("feller-probe: missing probe row");
  };

  std::vector<double> gap_vals, gap_ses;
  for (double s : spacings) {
    const FellerRow& c = estimate_at(center);
    const FellerRow& lo = estimate_at(center - s);
    const FellerRow& hi = estimate_at(center + s);
    const double g = std::max(std::abs(lo.estimate - c.estimate),
                              std::abs(hi.estimate - c.estimate));
    gap_vals.push_back(g);
    gap_ses.push_back(std::max({lo.se, hi.se, c.se}));
  }
  for (std::size_t i = 0; i + 1 < spacings.size(); ++i) {
    const double allow = 2.0 * std::max(gap_ses[i], gap_ses[i + 1]);
    man.add_check("gap_decrease_" + std::to_string(i),
                  gap_vals[i + 1] <= gap_vals[i] + allow, gap_vals[i + 1],
                  gap_vals[i] + allow);
  }

  const bool driftless =
      !drift.b1 && drift.b2.kind == DriftB2::Kind::zero;
  if (driftless && test_fn == "indicator_neg") {
    const FellerRow& c = estimate_at(center);
    const double exact = normal_cdf(-center / std::sqrt(cfg.exps.T));
    man.add_check("exact_gaussian_cdf",
                  std::abs(c.estimate - exact) <= 3.0 * c.se,
                  c.estimate - exact, 3.0 * c.se);
    bool monotone = true;
    for (std::size_t i = 0; i + 1 < table.rows.size(); ++i)
      monotone = monotone &&
                 table.rows[i + 1].estimate <= table.rows[i].estimate + 1e-12;
    man.add_check("monotone_map", monotone, 0.0, 0.0);
  }

  io::write_probe_csv(out / "probe.csv", table);
  man.add_file(out, "probe.csv", "probe-table");

  json rj;
  rj["test_fn"] = test_fn;
  rj["spacings"] = spacings;
  rj["gaps"] = gap_vals;
  write_report_json(out, man, rj);
  return man;
}

// ---------------------------------------------------------------------------
// density
// ---------------------------------------------------------------------------

Manifest run_density(const ExperimentConfig& cfg) {
  const JsonView p(cfg.params, "params");
  Manifest man = fresh_manifest(cfg);
  const auto& out = cfg.out_dir;

  const json dj = p.has("drift") ? p.raw("drift") : json::object();
  const DriftSpec drift = parse_drift(dj, "params.drift", cfg.exps);
  const auto r_list = p.get<std::vector<double>>("r_list", {1.0, 2.0, 3.0});
  const auto n_bins = p.get<std::size_t>("n_bins", 512);
  const auto refine_bins = p.get<std::size_t>("refine_bins", 1024);
  const SimKnobs k = parse_sim(p, cfg, 100000, 256);
  p.finish();

  const PathEnsemble ens = euler_maruyama(drift, k.sched, k.opt);
  const std::vector<double> terminal = ens.clean_terminal();
  const DensityEstimate base = kde(terminal, n_bins);
  const DensityEstimate fine = kde(terminal, refine_bins);
  base.validate();
  man.add_check("density_mass", std::abs(base.mass() - 1.0) <= 1e-2,
                base.mass(), 1.0);

  const bool brownian =
      !drift.b1 && drift.b2.kind == DriftB2::Kind::zero;
  const double T = cfg.exps.T;

  std::vector<double> rs, vals, refined, rels;
  for (double r : r_list) {
    const double v1 = lr_norm_proxy(base, r);
    const double v2 = lr_norm_proxy(fine, r);
    const double rel = std::abs(v2 - v1) / std::max(std::abs(v1), 1e-300);
    rs.push_back(r);
    vals.push_back(v1);
    refined.push_back(v2);
    rels.push_back(rel);
    const std::string tag = io::format_double(r);
    man.add_check("refinement_stable_r" + tag, rel <= 0.05, rel, 0.05);
    if (brownian) {
      // int N(x0, T)^r dy = (2 pi T)^{-(r-1)/2} r^{-1/2}
      const double exact =
          std::pow(2.0 * kPi * T, -0.5 * (r - 1.0)) / std::sqrt(r);
      man.add_check("oracle_r" + tag,
                    std::abs(v1 - exact) <= 0.05 * exact, v1, exact);
    }
  }

  if (brownian) {
    double sup_err = 0.0;
    for (std::size_t i = 0; i < base.x.size(); ++i) {
      const double z = base.x[i] - k.opt.x0;
      const double pdf =
          std::exp(-0.5 * z * z / T) / std::sqrt(2.0 * kPi * T);
      sup_err = std::max(sup_err, std::abs(base.values[i] - pdf));
    }
    man.add_check("kde_sup_error", sup_err <= 0.02, sup_err, 0.02);
  }

  io::write_density_csv(out / "density.csv", base);
  man.add_file(out, "density.csv", "density");
  io::write_columns_csv(out / "lr_norms.csv",
                        {"r", "value", "refined", "rel_change"},
                        {rs, vals, refined, rels});
  man.add_file(out, "lr_norms.csv", "table");

  json rj;
  rj["bandwidth"] = base.bandwidth;
  rj["mass"] = base.mass();
  rj["n_samples"] = terminal.size();
  write_report_json(out, man, rj);
  return man;
}

const std::set<std::string>& experiment_names() {
  static const std::set<std::string> names = {
      "pde-solve",     "krylov-check", "simulate",     "zvonkin-compare",
      "mollify-demo",  "counterexample", "feller-probe", "density"};
  return names;
}

}  // namespace

json ExperimentConfig::to_json() const {
  json j;
  j["experiment"] = experiment;
  j["exponents"] = {
      {"p", exps.p}, {"q", exps.q}, {"d", exps.dim}, {"T", exps.T}};
  j["seed"] = seed;
  j["workers"] = workers;
  j["strict"] = strict;
  j["out"] = out_dir.string();
  j["params"] = params;
  return j;
}

ExperimentConfig parse_config(const json& doc) {
  const JsonView v(doc, "config");
  ExperimentConfig cfg;
  cfg.experiment = v.require<std::string>("experiment");
  if (experiment_names().find(cfg.experiment) == experiment_names().end())
    throw ConfigError("config.experiment: unknown experiment '" +
                      cfg.experiment + "'");
  if (v.has("exponents")) {
    const JsonView e(v.raw("exponents"), "config.exponents");
    cfg.exps.p = e.get("p", 2.0);
    cfg.exps.q = e.get("q", 4.0);
    cfg.exps.dim = e.get<int>("d", 1);
    cfg.exps.T = e.get("T", 1.0);
    e.finish();
  }
  try {
    cfg.exps.require_critical();
  } catch (const DomainError& err) {
    throw ConfigError(std::string("config.exponents: ") + err.what());
  }
  cfg.seed = v.get<std::uint64_t>("seed", 2026);
  cfg.workers = v.get<int>("workers", 1);
  if (cfg.workers < 1 || cfg.workers > 64)
    throw ConfigError("config.workers: expected 1..64");
  cfg.strict = v.get("strict", false);
  cfg.out_dir = v.get<std::string>("out", "runs/" + cfg.experiment);
  if (v.has("params")) {
    const json& pj = v.raw("params");
    if (!pj.is_object())
      throw ConfigError("config.params: expected a JSON object");
    cfg.params = pj;
  } else {
    cfg.params = json::object();
  }
  v.finish();
  return cfg;
}

ExperimentConfig load_config_file(const std::filesystem::path& path) {
  json doc;
  try {
    doc = json::parse(io::read_text(path));
  } catch (const json::exception& e) {
    throw ConfigError("config parse error in " + path.string() + ": " +
                      e.what());
  } catch (const DataError& e) {
    throw ConfigError(std::string("config read error: ") + e.what());
  }
  return parse_config(doc);
}

json default_config(const std::string& experiment) {
  if (experiment_names().find(experiment) == experiment_names().end())
    throw ConfigError("unknown experiment '" + experiment + "'");
  return json{{"experiment", experiment}};
}

int run_experiment(const ExperimentConfig& cfg) {
  if (experiment_names().find(cfg.experiment) == experiment_names().end())
    throw ConfigError("unknown experiment '" + cfg.experiment + "'");
  std::filesystem::create_directories(cfg.out_dir);

  Manifest man;
  if (cfg.experiment == "pde-solve") man = run_pde_solve(cfg);
  else if (cfg.experiment == "krylov-check") man = run_krylov_check(cfg);
  else if (cfg.experiment == "simulate") man = run_simulate(cfg);
  else if (cfg.experiment == "zvonkin-compare") man = run_zvonkin_compare(cfg);
  else if (cfg.experiment == "mollify-demo") man = run_mollify_demo(cfg);
  else if (cfg.experiment == "counterexample") man = run_counterexample(cfg);
  else if (cfg.experiment == "feller-probe") man = run_feller_probe(cfg);
  else if (cfg.experiment == "density") man = run_density(cfg);

  io::write_text(cfg.out_dir / "config.json", cfg.to_json().dump(2) + "\n");
  man.add_file(cfg.out_dir, "config.json", "config");
  for (const auto& rel : io::emit_plots(man, cfg.out_dir))
    man.add_file(cfg.out_dir, rel, "plot-script");
  man.write(cfg.out_dir);
  return man.all_pass() ? 0 : 1;
}

}  // namespace critsde
