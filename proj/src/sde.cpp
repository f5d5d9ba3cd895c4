#include "critsde/sde.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <thread>

#include "critsde/quadrature.hpp"
#include "critsde/rng.hpp"
#include "critsde/spaces.hpp"
#include "critsde/special.hpp"

namespace critsde {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
}

void StepSchedule::validate() const {
  if (!(horizon > 0.0)) throw DomainError("StepSchedule: horizon <= 0");
  if (n_steps < 16) throw DomainError("StepSchedule: need n_steps >= 16");
  if (freeze_frac < 0.0 || freeze_frac >= 0.5)
    throw DomainError("StepSchedule: freeze_frac out of range");
}

double StepSchedule::freeze_eps() const {
  const double frac =
      freeze_frac > 0.0
          ? freeze_frac
          : 1.0 / (static_cast<double>(n_steps) * static_cast<double>(n_steps));
  return horizon * frac;
}

std::vector<double> StepSchedule::times() const {
  validate();
  const double dt = horizon / static_cast<double>(n_steps);
  const double eps = freeze_eps();
  std::vector<double> ts{0.0};
  ts.reserve(n_steps + 64);
  double t = 0.0;
  while (t < horizon) {
    const double remaining = horizon - t;
    double step;
    if (remaining <= 1.5 * eps) {
      step = remaining;  // final hop across the frozen sliver
    } else {
      step = std::min(dt, std::max(0.5 * remaining, eps));
    }
    t += step;
    if (horizon - t < 1e-15 * horizon) t = horizon;
    ts.push_back(t);
  }
  return ts;
}

std::size_t PathEnsemble::n_excluded() const {
  std::size_t c = 0;
  for (auto e : excluded) c += e != 0;
  return c;
}

double PathEnsemble::exclusion_rate() const {
  if (terminal.empty()) return 0.0;
  return static_cast<double>(n_excluded()) / static_cast<double>(n_paths());
}

namespace {

std::vector<double> filter_clean(const std::vector<double>& values,
                                 const std::vector<std::uint8_t>& excluded) {
  std::vector<double> out;
  out.reserve(values.size());
  for (std::size_t i = 0; i < values.size(); ++i)
    if (!excluded[i]) out.push_back(values[i]);
  return out;
}

}  // namespace

std::vector<double> PathEnsemble::clean_terminal() const {
  return filter_clean(terminal, excluded);
}

std::vector<double> PathEnsemble::clean_marginal(std::size_t record_idx) const {
  if (record_idx >= marginals.size())
    throw DomainError("PathEnsemble: record index out of range");
  return filter_clean(marginals[record_idx], excluded);
}

std::vector<double> PathEnsemble::clean_integral(const std::string& name) const {
  for (std::size_t k = 0; k < integral_names.size(); ++k)
    if (integral_names[k] == name) return filter_clean(integrals[k], excluded);
  throw DomainError("PathEnsemble: no integral accumulator named " + name);
}

PathEnsemble euler_maruyama_fn(const ScalarField2& drift,
                               const StepSchedule& sched, const SimOptions& opt,
                               const std::vector<Integrand>& integrands,
                               const ScalarField2& sigma) {
  sched.validate();
  if (!drift) throw DomainError("euler_maruyama: drift functor is empty");
  if (opt.n_paths == 0) throw DomainError("euler_maruyama: zero paths");

  const std::vector<double> times = sched.times();
  const std::size_t m = times.size() - 1;
  const double t_freeze = sched.horizon - sched.freeze_eps();

  // Snap the requested record times to schedule nodes once, up front; every
  // path sees the same indices, so records line up across workers.
  std::vector<std::size_t> rec_idx;
  PathEnsemble ens;
  ens.horizon = sched.horizon;
  ens.x0 = opt.x0;
  ens.seed = opt.seed;
  ens.step_times = times;
  for (double rt : opt.record_times) {
    if (rt < 0.0 || rt > sched.horizon + 1e-12)
      throw DomainError("euler_maruyama: record time outside [0, horizon]");
    const auto it = std::lower_bound(times.begin(), times.end(), rt);
    std::size_t idx = static_cast<std::size_t>(it - times.begin());
    if (idx > 0 && (idx == times.size() ||
                    std::abs(times[idx - 1] - rt) < std::abs(times[idx] - rt)))
      --idx;
    rec_idx.push_back(idx);
    ens.record_times.push_back(times[idx]);
  }
  // (step index, record slot) sorted by step index, so the stepping loop can
  // consume records with a single forward cursor even for unsorted requests.
  std::vector<std::pair<std::size_t, std::size_t>> rec_plan;
  for (std::size_t r = 0; r < rec_idx.size(); ++r)
    rec_plan.emplace_back(rec_idx[r], r);
  std::sort(rec_plan.begin(), rec_plan.end());

  ens.terminal.assign(opt.n_paths, kNaN);
  ens.excluded.assign(opt.n_paths, 0);
  ens.marginals.assign(rec_idx.size(),
                       std::vector<double>(opt.n_paths, kNaN));
  for (const auto& ig : integrands) {
    if (!ig.fn) throw DomainError("euler_maruyama: empty integrand " + ig.name);
    ens.integral_names.push_back(ig.name);
    ens.integrals.emplace_back(opt.n_paths, kNaN);
  }

  std::vector<double> auto_xy, auto_xx;
  if (opt.track_autocorr) {
    auto_xy.assign(opt.n_paths, 0.0);
    auto_xx.assign(opt.n_paths, 0.0);
  }

  const auto run_range = [&](std::size_t begin, std::size_t end) {
    std::vector<double> acc(integrands.size());
    for (std::size_t p = begin; p < end; ++p) {
      const PathRng rng(opt.seed, p);
      double x = opt.x0;
      std::fill(acc.begin(), acc.end(), 0.0);
      double prev_inc = kNaN;
      double sum_xy = 0.0, sum_xx = 0.0;
      bool bad = false;
      try {
        std::size_t cursor = 0;
        for (std::size_t k = 0; k <= m; ++k) {
          const double t = times[k];
          while (cursor < rec_plan.size() && rec_plan[cursor].first == k) {
            ens.marginals[rec_plan[cursor].second][p] = x;
            ++cursor;
          }
          if (k == m) break;

          const double dt = times[k + 1] - t;
          const double td = std::min(t, t_freeze);
          const double b = drift(td, x);
          const double s = sigma ? sigma(t, x) : 1.0;
          if (!std::isfinite(b) || !std::isfinite(s)) {
            bad = true;
            break;
          }
          for (std::size_t j = 0; j < acc.size(); ++j) {
            acc[j] += integrands[j].fn(td, x) * dt;
            if (!std::isfinite(acc[j])) {
              bad = true;
              break;
            }
          }
          if (bad) break;
          const double z = rng.normal_pair(k)[0];
          const double inc = b * dt + s * std::sqrt(dt) * z;
          if (opt.track_autocorr) {
            if (std::isfinite(prev_inc)) sum_xy += prev_inc * inc;
            sum_xx += inc * inc;
            prev_inc = inc;
          }
          x += inc;
          if (!std::isfinite(x)) {
            bad = true;
            break;
          }
        }
      } catch (const std::exception&) {
        bad = true;  // coefficient refused the visited state: flag the path
      }
      if (bad) {
        ens.excluded[p] = 1;
        continue;
      }
      ens.terminal[p] = x;
      for (std::size_t j = 0; j < acc.size(); ++j) ens.integrals[j][p] = acc[j];
      if (opt.track_autocorr) {
        auto_xy[p] = sum_xy;
        auto_xx[p] = sum_xx;
      }
    }
  };

  const int workers = std::clamp(opt.workers, 1, 64);
  if (workers == 1 || opt.n_paths < 256) {
    run_range(0, opt.n_paths);
  } else {
    std::vector<std::thread> pool;
    const std::size_t chunk =
        (opt.n_paths + static_cast<std::size_t>(workers) - 1) /
        static_cast<std::size_t>(workers);
    for (int w = 0; w < workers; ++w) {
      const std::size_t b = static_cast<std::size_t>(w) * chunk;
      const std::size_t e = std::min(opt.n_paths, b + chunk);
      if (b >= e) break;
      pool.emplace_back(run_range, b, e);
    }
    for (auto& th : pool) th.join();
  }

  if (opt.track_autocorr) {
    const double sxx = pairwise_sum(auto_xx);
    ens.autocorr_lag1 = sxx > 0.0 ? pairwise_sum(auto_xy) / sxx : 0.0;
  }
  if (ens.exclusion_rate() > 0.01)
    throw DataError("euler_maruyama: exclusion rate above 1% (" +
                    std::to_string(ens.n_excluded()) + " of " +
                    std::to_string(ens.n_paths()) + " paths)");
  return ens;
}

PathEnsemble euler_maruyama(const DriftSpec& drift, const StepSchedule& sched,
                            const SimOptions& opt,
                            const std::vector<Integrand>& integrands,
                            const ScalarField2& sigma) {
  drift.validate();
  if (std::abs(drift.horizon - sched.horizon) > 1e-12 * sched.horizon)
    throw DomainError("euler_maruyama: drift horizon differs from schedule");
  const DriftSpec local = drift;
  return euler_maruyama_fn(
      [local](double t, double x) { return local.eval(t, x); }, sched, opt,
      integrands, sigma);
}

KrylovReport krylov_check(const PathEnsemble& ens,
                          const KernelConstants& constants,
                          double reversed_weighted_norm,
                          const std::string& f_name,
                          const std::string& xi_name) {
  if (!(reversed_weighted_norm >= 0.0) ||
      !std::isfinite(reversed_weighted_norm))
    throw DomainError("krylov_check: reversed weighted norm must be finite");
  const std::vector<double> fv = ens.clean_integral(f_name);
  const std::vector<double> xv = ens.clean_integral(xi_name);
  if (fv.empty()) throw DomainError("krylov_check: no usable paths");
  double fmin = 0.0;
  for (double v : fv) fmin = std::min(fmin, v);
  if (fmin < -1e-9)
    throw DomainError("krylov_check: f must be nonnegative along paths");

  KrylovReport rep;
  const SummaryStats fs = summarize(fv);
  const SummaryStats xs = summarize(xv);
  rep.lhs = fs.mean;
  rep.lhs_se = fs.se;
  rep.xi_mean = xs.mean;
  rep.xi_se = xs.se;
  rep.reversed_norm = reversed_weighted_norm;
  rep.c0 = constants.c0;
  rep.rhs = constants.c0 * (1.0 + xs.mean) * reversed_weighted_norm;
  rep.n_used = fv.size();
  rep.pass = rep.lhs <= rep.rhs + 2.0 * rep.lhs_se;
  return rep;
}

double brownian_indicator_lhs(double half_width, double T) {
  if (!(half_width > 0.0) || !(T > 0.0))
    throw DomainError("brownian_indicator_lhs: positive arguments required");
  const GaussLegendre& gl = gauss_legendre(128);
  double acc = 0.0;
  for (std::size_t i = 0; i < gl.x.size(); ++i) {
    const double t = 0.5 * T * (gl.x[i] + 1.0);
    const double prob = 2.0 * normal_cdf(half_width / std::sqrt(t)) - 1.0;
    acc += gl.w[i] * prob;
  }
  return 0.5 * T * acc;
}

ModulusReport increment_modulus(const PathEnsemble& ens,
                                const std::vector<double>& gaps, double theta) {
  if (gaps.size() < 3)
    throw DomainError("increment_modulus: need at least 3 gap scales");
  if (ens.record_times.empty())
    throw DomainError("increment_modulus: ensemble has no recorded marginals");
  if (ens.n_paths() - ens.n_excluded() < 10000)
    throw DomainError("increment_modulus: need at least 1e4 usable paths");
  const double t0 = ens.record_times.front();
  const std::vector<double> anchor = ens.clean_marginal(0);

  ModulusReport rep;
  rep.theta = theta;
  for (double gap : gaps) {
    const double target = t0 + gap;
    std::size_t best = ens.record_times.size();
    double best_err = std::numeric_limits<double>::infinity();
    for (std::size_t r = 1; r < ens.record_times.size(); ++r) {
      const double err = std::abs(ens.record_times[r] - target);
      if (err < best_err) {
        best_err = err;
        best = r;
      }
    }
    if (best == ens.record_times.size() || best_err > 0.05 * gap)
      throw DomainError("increment_modulus: no recorded marginal near gap");
    const std::vector<double> later = ens.clean_marginal(best);
    std::vector<double> diff(anchor.size());
    for (std::size_t i = 0; i < anchor.size(); ++i)
      diff[i] = std::abs(later[i] - anchor[i]);
    const SummaryStats st = summarize(diff);
    rep.gaps.push_back(ens.record_times[best] - t0);
    rep.moduli.push_back(st.mean);
    rep.moduli_se.push_back(st.se);
  }
  rep.slope = loglog_slope(rep.gaps, rep.moduli);
  rep.pass = rep.slope >= 0.5 * theta - 0.1;
  return rep;
}

MollifiedDriftTable mollified_drift_convergence(
    const DriftSpec& drift, const std::vector<int>& n_list,
    const StepSchedule& sched, const SimOptions& opt,
    const SpatialGrid& moll_grid, const ExponentPair& exps) {
  if (!drift.b1)
    throw DomainError(
        "mollified_drift_convergence: drift has no singular component");
  drift.validate();
  exps.validate();

  const PathEnsemble exact = euler_maruyama(drift, sched, opt);
  const std::vector<double> exact_term = exact.clean_terminal();

  std::vector<double> phi(moll_grid.n_points);
  for (std::size_t i = 0; i < moll_grid.n_points; ++i)
    phi[i] = drift.b1->profile.eval(moll_grid.x(i));
  const double wsup = drift.b1->time.reversed_weighted_sup(exps.q);

  MollifiedDriftTable table;
  for (int n : n_list) {
    const DriftSpec dn = mollify_drift(drift, n, moll_grid);
    std::vector<double> diff = dn.b1->profile.values;
    for (std::size_t i = 0; i < diff.size(); ++i) diff[i] -= phi[i];
    MollifiedDriftRow row;
    row.n = n;
    row.drift_norm_error = wsup * lp_norm(diff, moll_grid.h(), exps.p);
    const PathEnsemble en = euler_maruyama(dn, sched, opt);  // shared noise
    row.ks_to_exact = ks_distance(en.clean_terminal(), exact_term);
    table.rows.push_back(row);
  }

  SimOptions alt1 = opt;
  alt1.seed = opt.seed ^ 0x9E3779B97F4A7C15ull;
  SimOptions alt2 = opt;
  alt2.seed = opt.seed ^ 0xC2B2AE3D27D4EB4Full;
  const PathEnsemble ref1 = euler_maruyama(drift, sched, alt1);
  const PathEnsemble ref2 = euler_maruyama(drift, sched, alt2);
  table.noise_floor =
      ks_distance(ref1.clean_terminal(), ref2.clean_terminal());
  return table;
}

namespace {

std::function<double(double)> feller_test_fn(const std::string& name) {
  if (name == "indicator_neg")
    return [](double x) { return x <= 0.0 ? 1.0 : 0.0; };
  if (name == "tanh")
    return [](double x) { return std::tanh(x); };
  if (name == "cos")
    return [](double x) { return std::cos(x); };
  if (name == "linear")
    throw DomainError("feller_probe: unbounded test function rejected");
  throw DomainError("feller_probe: unknown test function " + name);
}

}  // namespace

FellerTable feller_probe(const DriftSpec& drift, const std::string& test_fn,
                         const std::vector<double>& x_list,
                         const StepSchedule& sched, const SimOptions& opt) {
  const auto fn = feller_test_fn(test_fn);
  if (x_list.empty()) throw DomainError("feller_probe: empty start list");
  FellerTable table;
  table.test_fn = test_fn;
  table.t = sched.horizon;
  for (double x0 : x_list) {
    SimOptions local = opt;  // identical seed across x0: common random numbers
    local.x0 = x0;
    const PathEnsemble ens = euler_maruyama(drift, sched, local);
    std::vector<double> vals = ens.clean_terminal();
    for (double& v : vals) v = fn(v);
    const SummaryStats st = summarize(vals);
    table.rows.push_back({x0, st.mean, st.se});
  }
  return table;
}

}  // namespace critsde
