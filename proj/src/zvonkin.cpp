#include "critsde/zvonkin.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <memory>

#include "critsde/stats.hpp"

namespace critsde {

namespace {

double hermite_eval(double t, double h, double p0, double p1, double m0,
                    double m1) {
  const double t2 = t * t;
  const double t3 = t2 * t;
  return (2.0 * t3 - 3.0 * t2 + 1.0) * p0 + (t3 - 2.0 * t2 + t) * h * m0 +
         (-2.0 * t3 + 3.0 * t2) * p1 + (t3 - t2) * h * m1;
}

// Locate x on a uniform grid [front, back] with n nodes; returns (cell, frac).
std::pair<std::size_t, double> locate_uniform(double x, double front,
                                              double back, std::size_t n) {
  const double h = (back - front) / static_cast<double>(n - 1);
  double u = (x - front) / h;
  if (u < 0.0) u = 0.0;
  auto i = static_cast<std::size_t>(u);
  if (i >= n - 1) {
    i = n - 2;
    u = static_cast<double>(n - 1);
  }
  return {i, std::min(u - static_cast<double>(i), 1.0)};
}

}  // namespace

double SigmaSpec::eval(double x) const {
  switch (kind) {
    case Kind::constant:
      return base;
    case Kind::affine:
      return base + slope * x;
    case Kind::tanh_shift:
      return base + std::tanh(x - center);
    case Kind::grid: {
      // Constant extension outside the table keeps ellipticity intact.
      if (values.empty()) throw DomainError("SigmaSpec: empty grid table");
      if (x <= grid.x(0)) return values.front();
      if (x >= grid.x(grid.n_points - 1)) return values.back();
      const auto [i, t] = locate_uniform(x, grid.x(0), grid.x(grid.n_points - 1),
                                         grid.n_points);
      return (1.0 - t) * values[i] + t * values[i + 1];
    }
  }
  throw DomainError("SigmaSpec: unknown kind");
}

double SigmaSpec::deriv(double x) const {
  switch (kind) {
    case Kind::constant:
      return 0.0;
    case Kind::affine:
      return slope;
    case Kind::tanh_shift: {
      const double c = std::cosh(x - center);
      return 1.0 / (c * c);
    }
    case Kind::grid: {
      if (values.size() < 3)
        throw DomainError("SigmaSpec: grid too small for derivatives");
      const double h = grid.h();
      if (x <= grid.x(0)) return (values[1] - values[0]) / h;
      if (x >= grid.x(grid.n_points - 1))
        return (values[values.size() - 1] - values[values.size() - 2]) / h;
      const auto [i, t] = locate_uniform(x, grid.x(0), grid.x(grid.n_points - 1),
                                         grid.n_points);
      const auto node_deriv = [&](std::size_t j) {
        if (j == 0) return (values[1] - values[0]) / h;
        if (j + 1 >= values.size())
          return (values[values.size() - 1] - values[values.size() - 2]) / h;
        return (values[j + 1] - values[j - 1]) / (2.0 * h);
      };
      return (1.0 - t) * node_deriv(i) + t * node_deriv(i + 1);
    }
  }
  throw DomainError("SigmaSpec: unknown kind");
}

std::pair<double, double> SigmaSpec::ellipticity_on(double lo, double hi,
                                                    std::size_t n_scan) const {
  if (!(lo < hi)) throw DomainError("SigmaSpec: empty interval");
  if (n_scan < 2) throw DomainError("SigmaSpec: scan too coarse");
  double mn = std::numeric_limits<double>::infinity();
  double mx = -mn;
  for (std::size_t i = 0; i < n_scan; ++i) {
    const double x =
        lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n_scan - 1);
    const double s = eval(x);
    mn = std::min(mn, s);
    mx = std::max(mx, s);
  }
  return {mn, mx};
}

void SigmaSpec::validate() const {
  if (!std::isfinite(base) || !std::isfinite(slope) || !std::isfinite(center))
    throw DomainError("SigmaSpec: non-finite parameters");
  if (kind == Kind::grid) {
    grid.validate();
    if (values.size() != grid.n_points)
      throw DomainError("SigmaSpec: grid/value size mismatch");
    if (!all_finite(values)) throw DomainError("SigmaSpec: non-finite values");
  }
}

double ZvonkinMap::phi_at(double x) const {
  if (!contains(x))
    throw DomainError("ZvonkinMap: x outside the working interval");
  const auto [i, t] = locate_uniform(x, lo, hi, x_nodes.size());
  const double h = x_nodes[1] - x_nodes[0];
  return hermite_eval(t, h, phi[i], phi[i + 1], phi_prime[i], phi_prime[i + 1]);
}

double ZvonkinMap::phi_prime_at(double x) const {
  if (!contains(x))
    throw DomainError("ZvonkinMap: x outside the working interval");
  const auto [i, t] = locate_uniform(x, lo, hi, x_nodes.size());
  return (1.0 - t) * phi_prime[i] + t * phi_prime[i + 1];
}

double ZvonkinMap::psi_at(double y) const {
  if (!contains_y(y))
    throw DomainError("ZvonkinMap: y outside the transformed range");
  const auto [j, t] = locate_uniform(y, y_nodes.front(), y_nodes.back(),
                                     y_nodes.size());
  const double h = y_nodes[1] - y_nodes[0];
  return hermite_eval(t, h, psi[j], psi[j + 1], psi_prime[j], psi_prime[j + 1]);
}

void ZvonkinMap::validate() const {
  const std::size_t n = x_nodes.size();
  if (n < 9 || phi.size() != n || phi_prime.size() != n ||
      y_nodes.size() != psi.size() || psi.size() != psi_prime.size() ||
      psi.size() < 9)
    throw DataError("ZvonkinMap: malformed tables");
  if (!(delta1 > 0.0) || !(delta2 >= delta1))
    throw DataError("ZvonkinMap: invalid ellipticity bounds");
  const double tol = 1e-12;
  // The node grid is uniform; using the exact step (rather than differences
  // of O(|hi|) node values, whose absolute rounding error can reach the
  // sandwich slack) keeps the comparison aligned with the construction.
  const double dx = (x_nodes.back() - x_nodes.front()) / static_cast<double>(n - 1);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const double dphi = phi[i + 1] - phi[i];
    if (!(dphi > 0.0)) throw DataError("ZvonkinMap: phi not increasing");
    // Bi-Lipschitz sandwich per node pair; telescoping extends it to every
    // pair of grid points.
    if (dphi < dx / delta2 * (1.0 - tol) || dphi > dx / delta1 * (1.0 + tol))
      throw DataError("ZvonkinMap: bi-Lipschitz sandwich violated");
  }
  for (std::size_t j = 0; j + 1 < psi.size(); ++j)
    if (!(psi[j + 1] > psi[j]))
      throw DataError("ZvonkinMap: psi not increasing");
}

ZvonkinMap build_phi(const SigmaSpec& sigma, double lo, double hi,
                     std::size_t n_nodes) {
  sigma.validate();
  if (!(lo < hi)) throw DomainError("build_phi: empty interval");
  if (n_nodes < 33) throw DomainError("build_phi: resolution too coarse");

  // Scan includes every table node (stride 1/2 node), so the recorded
  // ellipticity bounds dominate the nodal values used below.
  const auto [d1, d2] = sigma.ellipticity_on(lo, hi, 2 * (n_nodes - 1) + 1);
  if (!(d1 > 0.0))
    throw DomainError("build_phi: sigma violates ellipticity (min <= 0)");

  ZvonkinMap map;
  map.lo = lo;
  map.hi = hi;
  map.delta1 = d1;
  map.delta2 = d2;
  map.x_nodes.resize(n_nodes);
  map.phi.resize(n_nodes);
  map.phi_prime.resize(n_nodes);
  const double h = (hi - lo) / static_cast<double>(n_nodes - 1);
  for (std::size_t i = 0; i < n_nodes; ++i) {
    map.x_nodes[i] = lo + static_cast<double>(i) * h;
    map.phi_prime[i] = 1.0 / sigma.eval(map.x_nodes[i]);
  }
  map.phi[0] = 0.0;
  for (std::size_t i = 1; i < n_nodes; ++i)
    map.phi[i] =
        map.phi[i - 1] + 0.5 * h * (map.phi_prime[i - 1] + map.phi_prime[i]);

  // Tabulate the inverse on a uniform range grid by Newton inversion of the
  // Hermite evaluator itself, so Psi inverts exactly what phi_at computes.
  map.y_nodes.resize(n_nodes);
  map.psi.resize(n_nodes);
  map.psi_prime.resize(n_nodes);
  const double y_lo = map.phi.front();
  const double y_hi = map.phi.back();
  for (std::size_t j = 0; j < n_nodes; ++j) {
    const double y = y_lo + (y_hi - y_lo) * static_cast<double>(j) /
                               static_cast<double>(n_nodes - 1);
    map.y_nodes[j] = y;
    double x = lo + (hi - lo) * (y - y_lo) / (y_hi - y_lo);
    for (int it = 0; it < 50; ++it) {
      const double err = map.phi_at(x) - y;
      const double step = err / map.phi_prime_at(x);
      x = std::clamp(x - step, lo, hi);
      if (std::abs(step) < 1e-15 * (hi - lo)) break;
    }
    map.psi[j] = x;
    map.psi_prime[j] = sigma.eval(x);
  }
  map.psi.front() = lo;
  map.psi.back() = hi;
  map.validate();
  return map;
}

ZvonkinMap build_phi_around(const SigmaSpec& sigma, double x0, double T,
                            std::size_t n_nodes) {
  if (!(T > 0.0)) throw DomainError("build_phi_around: T <= 0");
  // Two passes: a provisional radius from sigma near x0, then the final
  // interval using the scanned upper ellipticity bound.
  const double rough = std::max(1.0, std::abs(sigma.eval(x0)));
  const double provisional = 8.0 * std::sqrt(T) * rough;
  const auto [d1, d2] =
      sigma.ellipticity_on(x0 - provisional, x0 + provisional);
  if (!(d1 > 0.0))
    throw DomainError("build_phi_around: sigma violates ellipticity");
  const double radius = 8.0 * std::sqrt(T) * d2;
  return build_phi(sigma, x0 - radius, x0 + radius, n_nodes);
}

ScalarField2 transformed_drift(const DriftSpec& b, const SigmaSpec& sigma,
                               const ZvonkinMap& map) {
  b.validate();
  sigma.validate();
  map.validate();
  const auto shared_map = std::make_shared<const ZvonkinMap>(map);
  const DriftSpec drift = b;
  const SigmaSpec sg = sigma;
  return [shared_map, drift, sg](double t, double y) {
    const double x = shared_map->psi_at(y);
    return drift.eval(t, x) / sg.eval(x) - 0.5 * sg.deriv(x);
  };
}

double transformed_singular_norm_bound(const DriftSpec& b,
                                       const ZvonkinMap& map,
                                       const ExponentPair& exps) {
  if (!b.b1) return 0.0;
  // Substituting y = Phi(x), dy = dx / sigma pays at most
  // delta1^{-(1 + 1/p)} on the L^p norm of the singular part.
  return b.b1->reversed_weighted_norm(exps) *
         std::pow(map.delta1, -1.0 - 1.0 / exps.p);
}

RouteComparison simulate_both_routes(const DriftSpec& b, const SigmaSpec& sigma,
                                     double x0, const StepSchedule& sched,
                                     const SimOptions& opt,
                                     double floor_ratio) {
  const ZvonkinMap map = build_phi_around(sigma, x0, sched.horizon);
  const SigmaSpec sg = sigma;
  const ScalarField2 sigma_fn = [sg](double, double x) { return sg.eval(x); };

  RouteComparison cmp;
  cmp.floor_ratio = floor_ratio;

  SimOptions opt_a = opt;
  opt_a.x0 = x0;
  cmp.direct = euler_maruyama(b, sched, opt_a, {}, sigma_fn);

  SimOptions opt_b = opt;
  opt_b.x0 = map.phi_at(x0);
  opt_b.seed = opt.seed ^ 0xD6E8FEB86659FD93ull;
  cmp.transformed =
      euler_maruyama_fn(transformed_drift(b, sigma, map), sched, opt_b);
  for (double y : cmp.transformed.clean_terminal()) {
    // The final increment can poke past the tabulated range without having
    // been seen by the drift; such paths count as exits and are dropped.
    if (map.contains_y(y)) cmp.mapped_terminal.push_back(map.psi_at(y));
  }
  if (cmp.mapped_terminal.size() <
      (cmp.transformed.n_paths() - cmp.transformed.n_excluded()) * 99 / 100)
    throw DataError("simulate_both_routes: too many transformed paths exited");

  cmp.ks = ks_distance(cmp.direct.clean_terminal(), cmp.mapped_terminal);

  // Same-law noise floor: three independent direct runs, mean of the three
  // pairwise KS distances.
  std::array<std::vector<double>, 3> ref;
  const std::uint64_t salts[3] = {0x9E3779B97F4A7C15ull, 0xC2B2AE3D27D4EB4Full,
                                  0x165667B19E3779F9ull};
  for (int i = 0; i < 3; ++i) {
    SimOptions o = opt_a;
    o.seed = opt.seed ^ salts[i];
    ref[i] = euler_maruyama(b, sched, o, {}, sigma_fn).clean_terminal();
  }
  cmp.noise_floor = (ks_distance(ref[0], ref[1]) + ks_distance(ref[0], ref[2]) +
                     ks_distance(ref[1], ref[2])) /
                    3.0;
  cmp.pass = cmp.ks <= floor_ratio * cmp.noise_floor;
  return cmp;
}

}  // namespace critsde
