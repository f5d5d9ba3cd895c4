#include "critsde/spaces.hpp"

#include <algorithm>
#include <cmath>

#include "critsde/convolve.hpp"
#include "critsde/quadrature.hpp"

namespace critsde {

double weighted_norm(const SpaceTimeField& f, const ExponentPair& exps) {
  const auto prof = weighted_profile(f, exps);
  return *std::max_element(prof.begin(), prof.end());
}

std::vector<double> weighted_profile(const SpaceTimeField& f,
                                     const ExponentPair& exps) {
  exps.validate();
  f.validate();
  std::vector<double> prof(f.n_times());
  for (std::size_t i = 0; i < f.n_times(); ++i) {
    const double t = f.times[i];
    prof[i] = (t == 0.0)
                  ? 0.0
                  : exps.weight(t) * lp_norm(f.slice(i), f.grid.h(), exps.p);
  }
  return prof;
}

namespace {
// Relative growth threshold for the L^q membership refinement check.  The
// partial integrals int_{c}^{T} ||f(t)||_p^q dt are compared at cutoffs
// c = t_min * {64, 16, 4, 1}; log-order divergences step by >= ~2% per
// refinement while convergent log-damped tails step by <= ~0.2%, so 1.5%
// separates the families that are distinguishable in double precision.
constexpr double kLqStepTol = 0.015;
}  // namespace

SpaceMembership classify_space(const SpaceTimeField& f,
                               const ExponentPair& exps, double tol) {
  exps.validate();
  f.validate();
  if (!(f.times.front() > 0.0))
    throw DomainError("classify_space: smallest grid time must be positive");
  if (!(tol > 0.0)) throw DomainError("classify_space: tol > 0 required");

  SpaceMembership m;
  const auto prof = weighted_profile(f, exps);
  m.linf_q_norm = *std::max_element(prof.begin(), prof.end());
  m.cq_norm = m.linf_q_norm;  // sampled fields are continuous slice families
  m.limit_at_zero = prof.front();
  m.in_c0q = m.limit_at_zero <= tol;

  const double t_min = f.times.front();
  std::size_t i4 = 0;
  while (i4 + 1 < f.n_times() && f.times[i4] < 4.0 * t_min) ++i4;
  m.limit_trend = prof[i4] > 0.0 ? prof.front() / prof[i4] : 0.0;

  // Partial integrals of ||f(t)||_p^q over [c_j, T], c_j = t_min * 4^{3-j}.
  std::vector<double> y(f.n_times());
  for (std::size_t i = 0; i < f.n_times(); ++i) {
    const double w = prof[i] / (f.times[i] > 0.0 ? exps.weight(f.times[i]) : 1.0);
    y[i] = std::pow(w, exps.q);
  }
  for (int j = 0; j < 4; ++j) {
    const double cutoff = t_min * std::pow(4.0, 3 - j);
    std::size_t i0 = 0;
    while (i0 + 1 < f.n_times() && f.times[i0] < cutoff) ++i0;
    double acc = 0.0;
    for (std::size_t i = i0; i + 1 < f.n_times(); ++i)
      acc += 0.5 * (f.times[i + 1] - f.times[i]) * (y[i] + y[i + 1]);
    m.lq_refinements.push_back(acc);
  }
  const double last = m.lq_refinements[3], prev = m.lq_refinements[2];
  m.lq_member = (last <= prev * (1.0 + kLqStepTol)) ||
                (last - prev) <= kLqStepTol * std::abs(last);
  return m;
}

SpaceTimeField reverse_time(const SpaceTimeField& f,
                            bool allow_reflected_grid) {
  f.validate();
  const std::size_t n = f.n_times();
  const double tol = 1e-12 * std::max(f.T, 1.0);
  bool symmetric = true;
  for (std::size_t i = 0; i < n; ++i)
    if (std::abs(f.T - f.times[n - 1 - i] - f.times[i]) > tol) {
      symmetric = false;
      break;
    }
  if (!symmetric && !allow_reflected_grid)
    throw DomainError(
        "reverse_time: time grid is not reflection-symmetric; pass "
        "allow_reflected_grid to return the field on the reflected grid");

  SpaceTimeField out;
  out.T = f.T;
  out.grid = f.grid;
  out.times.resize(n);
  for (std::size_t i = 0; i < n; ++i)
    out.times[i] = symmetric ? f.times[i] : f.T - f.times[n - 1 - i];
  out.values.resize(f.values.size());
  for (std::size_t i = 0; i < n; ++i) {
    auto src = f.slice(n - 1 - i);
    std::copy(src.begin(), src.end(),
              out.values.begin() + static_cast<std::ptrdiff_t>(i * f.n_x()));
  }
  out.validate();
  return out;
}

double bump_normalizer() {
  static const double c = [] {
    // exp(-1/(1-x^2)) is smooth and compactly supported, so the trapezoid
    // rule converges faster than any power of the step.
    const std::size_t N = 8001;
    std::vector<double> v(N, 0.0);
    const double h = 2.0 / static_cast<double>(N - 1);
    for (std::size_t i = 0; i < N; ++i) {
      const double x = -1.0 + h * static_cast<double>(i);
      const double s = 1.0 - x * x;
      v[i] = s > 0.0 ? std::exp(-1.0 / s) : 0.0;
    }
    return 1.0 / trapezoid(v, h);
  }();
  return c;
}

MollifierSpec build_mollifier(int n, double h) {
  if (n < 1) throw DomainError("build_mollifier: n >= 1 required");
  if (!(h > 0.0)) throw DomainError("build_mollifier: h > 0 required");
  if (1.0 / static_cast<double>(n) < 2.0 * h)
    throw ResolutionError(
        "build_mollifier: kernel width 1/n below twice the grid spacing (1/n "
        ">= 2h required)");
  MollifierSpec m;
  m.n = n;
  m.h = h;
  const double c = bump_normalizer();
  const auto K = static_cast<std::size_t>(std::ceil(1.0 / (n * h)));
  m.kern_half.resize(K + 1, 0.0);
  for (std::size_t j = 0; j <= K; ++j) {
    const double y = static_cast<double>(n) * static_cast<double>(j) * h;
    const double s = 1.0 - y * y;
    m.kern_half[j] = s > 0.0 ? n * c * std::exp(-1.0 / s) : 0.0;
  }
  double mass = m.kern_half[0];
  for (std::size_t j = 1; j <= K; ++j) mass += 2.0 * m.kern_half[j];
  m.raw_mass = mass * h;
  for (auto& v : m.kern_half) v /= m.raw_mass;
  m.second_moment = 0.0;
  for (std::size_t j = 1; j <= K; ++j) {
    const double y = static_cast<double>(j) * h;
    m.second_moment += 2.0 * y * y * m.kern_half[j];
  }
  m.second_moment *= h;
  return m;
}

std::vector<double> mollify_slice(std::span<const double> slice,
                                  const MollifierSpec& m) {
  return convolve_kernel(slice, m.kern_half, m.h, /*antisymmetric=*/false);
}

SpaceTimeField mollify(const SpaceTimeField& f, int n) {
  f.validate();
  const MollifierSpec m = build_mollifier(n, f.grid.h());
  SpaceTimeField out = f;
  for (std::size_t ti = 0; ti < f.n_times(); ++ti) {
    const auto conv = mollify_slice(f.slice(ti), m);
    std::copy(conv.begin(), conv.end(),
              out.values.begin() + static_cast<std::ptrdiff_t>(ti * f.n_x()));
  }
  return out;
}

MollificationProfile mollification_profile(const SpaceTimeField& f,
                                           const ExponentPair& exps,
                                           const std::vector<int>& n_list) {
  exps.validate();
  f.validate();
  if (n_list.empty()) throw DomainError("mollification_profile: empty n_list");
  MollificationProfile prof;
  prof.n_list = n_list;
  const double h = f.grid.h();
  std::vector<double> diff(f.n_x());
  for (int n : n_list) {
    const MollifierSpec m = build_mollifier(n, h);
    double worst = 0.0;
    for (std::size_t ti = 0; ti < f.n_times(); ++ti) {
      const auto conv = mollify_slice(f.slice(ti), m);
      const auto orig = f.slice(ti);
      for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = conv[i] - orig[i];
      const double t = f.times[ti];
      const double w = t > 0.0 ? exps.weight(t) : 0.0;
      worst = std::max(worst, w * lp_norm(diff, h, exps.p));
    }
    prof.errors.push_back(worst);
  }
  std::vector<double> ns(n_list.begin(), n_list.end());
  prof.slope = loglog_slope(ns, prof.errors);
  return prof;
}

SpaceTimeField counterexample_field(int k_max, double h, double L) {
  if (k_max < 2) throw DomainError("counterexample_field: k_max >= 2 required");
  if (!(h > 0.0) || h > 1.0 / (4.0 * k_max * static_cast<double>(k_max)) + 1e-15)
    throw ResolutionError(
        "counterexample_field: spacing must satisfy h <= 1/(4 k_max^2) so the "
        "thinnest bump is resolved");
  if (L < static_cast<double>(k_max) + 2.0 - 1e-12)
    throw DomainError("counterexample_field: L >= k_max + 2 required");

  SpatialGrid grid;
  grid.L = L;
  grid.n_points = static_cast<std::size_t>(std::llround(2.0 * L / h)) + 1;
  std::vector<double> times(k_max);
  for (int k = 1; k <= k_max; ++k) {
    const double a = (k - 1.0) / k, b = static_cast<double>(k) / (k + 1.0);
    times[k - 1] = 0.5 * (a + b);
  }
  SpaceTimeField f(std::move(times), 1.0, grid);
  const double ha = f.grid.h();
  for (int k = 1; k <= k_max; ++k) {
    const auto i0 = f.grid.index_of(static_cast<double>(k));
    const auto cells = static_cast<std::size_t>(
        std::max<long long>(1, std::llround(1.0 / (ha * k * static_cast<double>(k)))));
    const double amp = 1.0 / std::sqrt(static_cast<double>(cells) * ha);
    for (std::size_t j = 0; j < cells; ++j) f.at(k - 1, i0 + j) = amp;
  }
  return f;
}

CounterexampleCheck counterexample_check(const SpaceTimeField& f,
                                         const std::vector<int>& n_list) {
  f.validate();
  if (n_list.empty()) throw DomainError("counterexample_check: empty n_list");
  CounterexampleCheck chk;
  chk.n_list = n_list;
  const double h = f.grid.h();
  std::vector<double> diff(f.n_x());
  for (int n : n_list) {
    const MollifierSpec m = build_mollifier(n, h);
    double worst = 0.0;
    int worst_k = 0;
    for (std::size_t ti = 0; ti < f.n_times(); ++ti) {
      const auto conv = mollify_slice(f.slice(ti), m);
      const auto orig = f.slice(ti);
      for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = conv[i] - orig[i];
      const double err = lp_norm(diff, h, 2.0);
      if (err * err > worst) {
        worst = err * err;
        worst_k = static_cast<int>(ti) + 1;
      }
    }
    chk.worst_sq_error.push_back(worst);
    chk.worst_k.push_back(worst_k);
  }
  return chk;
}

}  // namespace critsde
