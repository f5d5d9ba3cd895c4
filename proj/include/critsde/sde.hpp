#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "critsde/drift.hpp"
#include "critsde/heat.hpp"
#include "critsde/stats.hpp"

namespace critsde {

// Deterministic stepping times on [0, horizon].  The base step is uniform;
// approaching the horizon the step is clamped to min(dt, (horizon - t)/2) so
// that a drift singularity at the endpoint is met by geometrically shrinking
// steps, and the final sliver of width ~freeze_eps is crossed in one hop with
// the drift frozen at the last safe time.
struct StepSchedule {
  double horizon = 1.0;
  std::size_t n_steps = 256;
  double freeze_frac = 0.0;  // 0 selects the default 1/n_steps^2

  double freeze_eps() const;
  std::vector<double> times() const;
  void validate() const;  // n_steps >= 16
};

struct SimOptions {
  std::uint64_t seed = 2026;
  std::size_t n_paths = 10000;
  int workers = 1;     // must not change any output bit
  double x0 = 0.0;
  std::vector<double> record_times;  // snapped to the schedule
  bool track_autocorr = false;       // pooled lag-1 increment autocorrelation
};

using ScalarField2 = std::function<double(double, double)>;  // (t, x)

struct Integrand {
  std::string name;
  ScalarField2 fn;  // accumulated as sum fn(t_k, X_k) dt_k along each path
};

struct PathEnsemble {
  double horizon = 1.0;
  double x0 = 0.0;
  std::uint64_t seed = 0;
  std::vector<double> step_times;
  std::vector<double> terminal;          // NaN for excluded paths
  std::vector<std::uint8_t> excluded;    // 1 = drift/sigma blew up on the path
  std::vector<double> record_times;      // actual (snapped) values
  std::vector<std::vector<double>> marginals;  // [record][path]
  std::vector<std::string> integral_names;
  std::vector<std::vector<double>> integrals;  // [integrand][path]
  double autocorr_lag1 = 0.0;

  std::size_t n_paths() const { return terminal.size(); }
  std::size_t n_excluded() const;
  double exclusion_rate() const;
  std::vector<double> clean_terminal() const;
  std::vector<double> clean_marginal(std::size_t record_idx) const;
  std::vector<double> clean_integral(const std::string& name) const;
};

// Explicit left-endpoint Euler scheme, unit additive noise unless `sigma` is
// given.  Normals come from a counter-based stream keyed by (seed, path,
// step): results are bit-identical for every worker count.  Paths where a
// coefficient evaluates non-finite are flagged and excluded; an exclusion
// rate above 1% is a run-level error.
PathEnsemble euler_maruyama(const DriftSpec& drift, const StepSchedule& sched,
                            const SimOptions& opt,
                            const std::vector<Integrand>& integrands = {},
                            const ScalarField2& sigma = {});

// Same engine for a free-form drift functor (transform routes, benchmarks).
PathEnsemble euler_maruyama_fn(const ScalarField2& drift,
                               const StepSchedule& sched, const SimOptions& opt,
                               const std::vector<Integrand>& integrands = {},
                               const ScalarField2& sigma = {});

// One-sided pathwise-moment bound check: the ensemble mean of the
// accumulated f-integral against c0 (1 + E int |xi|) ||I_T f||_w, where the
// ensemble carries both accumulators by name.
struct KrylovReport {
  double lhs = 0.0;
  double lhs_se = 0.0;
  double xi_mean = 0.0;
  double xi_se = 0.0;
  double reversed_norm = 0.0;
  double c0 = 0.0;
  double rhs = 0.0;
  bool pass = false;  // lhs <= rhs + 2 lhs_se
  std::size_t n_used = 0;
};
KrylovReport krylov_check(const PathEnsemble& ens,
                          const KernelConstants& constants,
                          double reversed_weighted_norm,
                          const std::string& f_name = "f",
                          const std::string& xi_name = "xi");

// Closed-form lhs for the driftless indicator case:
// int_0^T P(|W_t| <= a) dt by Gaussian-CDF quadrature.
double brownian_indicator_lhs(double half_width, double T);

// E|X_{t0+gap} - X_{t0}| over recorded marginals, log-log slope in the gap.
// Theory guarantees slope >= theta/2 for small singular drifts.
struct ModulusReport {
  std::vector<double> gaps;
  std::vector<double> moduli;
  std::vector<double> moduli_se;
  double slope = 0.0;
  double theta = 0.0;
  bool pass = false;  // slope >= theta/2 - 0.1
};
ModulusReport increment_modulus(const PathEnsemble& ens,
                                const std::vector<double>& gaps, double theta);

// Simulates the drift and its mollified versions under shared noise and
// reports the reversed weighted drift-error norm plus the terminal-law
// distance to the unmollified run per scale, with a same-law noise floor.
struct MollifiedDriftRow {
  int n = 0;
  double drift_norm_error = 0.0;
  double ks_to_exact = 0.0;
};
struct MollifiedDriftTable {
  std::vector<MollifiedDriftRow> rows;
  double noise_floor = 0.0;  // KS distance between two independent exact runs
};
MollifiedDriftTable mollified_drift_convergence(
    const DriftSpec& drift, const std::vector<int>& n_list,
    const StepSchedule& sched, const SimOptions& opt,
    const SpatialGrid& moll_grid, const ExponentPair& exps);

// Monte Carlo map x |-> E f(X_t(x)) over a list of starting points with
// common random numbers: the same noise for every x, so continuity of the
// semigroup shows up as small adjacent gaps rather than noise.
struct FellerRow {
  double x = 0.0;
  double estimate = 0.0;
  double se = 0.0;
};
struct FellerTable {
  std::string test_fn;
  double t = 0.0;
  std::vector<FellerRow> rows;
};
// Bounded test-function catalog: indicator_neg (1 on x <= 0), tanh, cos.
// Anything unbounded (e.g. "linear") is rejected.
FellerTable feller_probe(const DriftSpec& drift, const std::string& test_fn,
                         const std::vector<double>& x_list,
                         const StepSchedule& sched, const SimOptions& opt);

}  // namespace critsde
