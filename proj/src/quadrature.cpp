#include "critsde/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>

namespace critsde {

double trapezoid(std::span<const double> values, double h) {
  if (values.size() < 2) throw DomainError("trapezoid: need at least 2 nodes");
  // Pairwise summation keeps the reduction order-insensitive-by-construction.
  std::vector<double> acc(values.begin(), values.end());
  acc.front() *= 0.5;
  acc.back() *= 0.5;
  while (acc.size() > 1) {
    std::size_t m = acc.size() / 2;
    for (std::size_t i = 0; i < m; ++i) acc[i] = acc[2 * i] + acc[2 * i + 1];
    if (acc.size() % 2) acc[m - 1] += acc.back();
    acc.resize(m);
  }
  return acc[0] * h;
}

double lp_norm(std::span<const double> values, double h, double p) {
  if (!(p >= 1.0)) throw DomainError("lp_norm: p >= 1 required");
  std::vector<double> powed(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i]))
      throw DataError("lp_norm: non-finite value in slice");
    powed[i] = std::pow(std::abs(values[i]), p);
  }
  return std::pow(trapezoid(powed, h), 1.0 / p);
}

namespace {
GaussLegendre compute_gl(int n) {
  GaussLegendre gl;
  gl.x.resize(n);
  gl.w.resize(n);
  const int m = (n + 1) / 2;
  for (int i = 0; i < m; ++i) {
    // Chebyshev-based initial guess, then Newton on P_n.
    double x = std::cos(kPi * (i + 0.75) / (n + 0.5));
    double pp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      pp = n * (x * p1 - p0) / (x * x - 1.0);
      double dx = p1 / pp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    gl.x[i] = -x;
    gl.x[n - 1 - i] = x;
    gl.w[i] = gl.w[n - 1 - i] = 2.0 / ((1.0 - x * x) * pp * pp);
  }
  return gl;
}
}  // namespace

const GaussLegendre& gauss_legendre(int n) {
  if (n < 1 || n > 512) throw DomainError("gauss_legendre: n out of range");
  static std::mutex mtx;
  static std::map<int, std::unique_ptr<GaussLegendre>> cache;
  std::lock_guard<std::mutex> lock(mtx);
  auto& slot = cache[n];
  if (!slot) slot = std::make_unique<GaussLegendre>(compute_gl(n));
  return *slot;
}

DuhamelRule duhamel_rule(double t, double q, int n_per_panel) {
  if (!(t > 0.0)) throw DomainError("duhamel_rule: t > 0 required");
  if (!(q > 2.0)) throw DomainError("duhamel_rule: q > 2 required");
  const GaussLegendre& gl = gauss_legendre(n_per_panel);
  DuhamelRule rule;
  rule.s.reserve(2 * n_per_panel);
  rule.tau.reserve(2 * n_per_panel);
  rule.w.reserve(2 * n_per_panel);

  // Left panel: s = t*w^4, s in [0, t/2]  =>  w in [0, (1/2)^{1/4}].
  {
    const double wmax = std::pow(0.5, 0.25);
    for (int i = 0; i < n_per_panel; ++i) {
      const double w = 0.5 * wmax * (gl.x[i] + 1.0);
      const double dw = 0.5 * wmax * gl.w[i];
      const double s = t * w * w * w * w;
      rule.s.push_back(s);
      rule.tau.push_back(t - s);  // s <= t/2, no cancellation here
      rule.w.push_back(4.0 * t * w * w * w * dw);
    }
  }
  // Right panel: t-s = t*v^m, m = max(4, 2*ceil(q))  =>  v in [0, (1/2)^{1/m}].
  // tau is formed in the substitution variable: near the singular endpoint
  // t*v^m underflows the spacing of t, so s = t - tau rounds to t itself and
  // recomputing t - s there would give 0 instead of the true distance.
  {
    const int m = std::max(4, 2 * static_cast<int>(std::ceil(q)));
    const double vmax = std::pow(0.5, 1.0 / m);
    for (int i = 0; i < n_per_panel; ++i) {
      const double v = 0.5 * vmax * (gl.x[i] + 1.0);
      const double dv = 0.5 * vmax * gl.w[i];
      const double vpow = std::pow(v, m - 1);
      const double tau = t * vpow * v;
      rule.s.push_back(t - tau);
      rule.tau.push_back(tau);
      rule.w.push_back(m * t * vpow * dv);
    }
  }
  return rule;
}

double edge_refined_integral(const std::function<double(double)>& g, double T,
                             double edge_frac, int n_panels) {
  if (!(T > 0.0) || !(edge_frac > 0.0) || !(edge_frac < 1.0))
    throw DomainError("edge_refined_integral: bad T or edge_frac");
  const GaussLegendre& gl = gauss_legendre(16);
  // Panels [T - d_k, T - d_{k+1}] with d_k geometric from T down to T*edge_frac.
  const double rho = std::pow(edge_frac, 1.0 / n_panels);
  double total = 0.0;
  double d0 = T;
  for (int k = 0; k < n_panels; ++k) {
    const double d1 = T * std::pow(rho, k + 1);
    const double a = T - d0, b = T - d1;
    for (int i = 0; i < 16; ++i) {
      const double t = 0.5 * (b - a) * (gl.x[i] + 1.0) + a;
      total += 0.5 * (b - a) * gl.w[i] * g(t);
    }
    d0 = d1;
  }
  return total;
}

double loglog_slope(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2)
    throw DomainError("loglog_slope: need matched arrays with >= 2 points");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0))
      throw DomainError("loglog_slope: positive data required");
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace critsde
