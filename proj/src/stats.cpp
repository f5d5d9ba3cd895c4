#include "critsde/stats.hpp"

#include <algorithm>
#include <cmath>

#include "critsde/common.hpp"
#include "critsde/convolve.hpp"
#include "critsde/quadrature.hpp"

namespace critsde {

double pairwise_sum(std::span<const double> values) {
  const std::size_t n = values.size();
  if (n == 0) return 0.0;
  if (n <= 8) {
    double s = 0.0;
    for (double v : values) s += v;
    return s;
  }
  const std::size_t half = n / 2;
  return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

SummaryStats summarize(std::span<const double> sample) {
  SummaryStats out;
  out.n = sample.size();
  if (out.n == 0) throw DomainError("summarize: empty sample");
  if (!all_finite(std::vector<double>(sample.begin(), sample.end())))
    throw DataError("summarize: non-finite sample values");
  const double n = static_cast<double>(out.n);
  out.mean = pairwise_sum(sample) / n;
  if (out.n > 1) {
    std::vector<double> sq(sample.size());
    for (std::size_t i = 0; i < sample.size(); ++i) {
      const double d = sample[i] - out.mean;
      sq[i] = d * d;
    }
    out.sd = std::sqrt(pairwise_sum(sq) / (n - 1.0));
    out.se = out.sd / std::sqrt(n);
  }
  return out;
}

double ks_distance(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw DomainError("ks_distance: empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  std::size_t ia = 0, ib = 0;
  double d = 0.0;
  while (ia < a.size() && ib < b.size()) {
    const double v = std::min(a[ia], b[ib]);
    while (ia < a.size() && a[ia] <= v) ++ia;
    while (ib < b.size() && b[ib] <= v) ++ib;
    d = std::max(d, std::abs(static_cast<double>(ia) / na -
                             static_cast<double>(ib) / nb));
  }
  return d;
}

double DensityEstimate::mass() const {
  if (x.size() < 2) return 0.0;
  return trapezoid(values, x[1] - x[0]);
}

double DensityEstimate::value_at(double xq) const {
  if (x.empty() || xq <= x.front() || xq >= x.back()) return 0.0;
  const double h = x[1] - x[0];
  const double u = (xq - x.front()) / h;
  const auto i = static_cast<std::size_t>(u);
  if (i + 1 >= values.size()) return values.back();
  const double lam = u - static_cast<double>(i);
  return (1.0 - lam) * values[i] + lam * values[i + 1];
}

void DensityEstimate::validate() const {
  if (x.size() != values.size() || x.size() < 2)
    throw DataError("DensityEstimate: malformed grid");
  for (double v : values)
    if (!(v >= -1e-12) || !std::isfinite(v))
      throw DataError("DensityEstimate: negative or non-finite value");
  if (std::abs(mass() - 1.0) > 1e-2)
    throw DataError("DensityEstimate: mass deviates from 1 by more than 1e-2");
}

DensityEstimate kde(const std::vector<double>& sample, std::size_t n_bins,
                    double bandwidth) {
  if (sample.size() < 100)
    throw DomainError("kde: need at least 100 samples");
  if (n_bins < 16) throw DomainError("kde: need at least 16 bins");
  const SummaryStats st = summarize(sample);
  if (bandwidth <= 0.0) {
    std::vector<double> sorted = sample;
    std::sort(sorted.begin(), sorted.end());
    const auto quantile = [&](double f) {
      const double pos = f * static_cast<double>(sorted.size() - 1);
      const auto i = static_cast<std::size_t>(pos);
      const double lam = pos - static_cast<double>(i);
      if (i + 1 >= sorted.size()) return sorted.back();
      return (1.0 - lam) * sorted[i] + lam * sorted[i + 1];
    };
    const double iqr = quantile(0.75) - quantile(0.25);
    double scale = st.sd;
    if (iqr > 0.0) scale = std::min(scale, iqr / 1.349);
    if (!(scale > 0.0))
      throw DomainError("kde: degenerate sample, bandwidth undefined");
    bandwidth =
        1.06 * scale * std::pow(static_cast<double>(sample.size()), -0.2);
  }

  const auto [lo_it, hi_it] = std::minmax_element(sample.begin(), sample.end());
  // Grid anchored to the sample extremes so the estimate is exactly shift
  // equivariant; 5 bandwidths of padding keep the truncated tail mass tiny.
  const double lo = *lo_it - 5.0 * bandwidth;
  const double hi = *hi_it + 5.0 * bandwidth;
  const double h = (hi - lo) / static_cast<double>(n_bins);

  DensityEstimate out;
  out.bandwidth = bandwidth;
  out.n_samples = sample.size();
  out.x.resize(n_bins + 1);
  for (std::size_t i = 0; i <= n_bins; ++i)
    out.x[i] = lo + static_cast<double>(i) * h;

  // Linear binning: each sample splits its unit mass between the two
  // enclosing nodes, preserving total mass and first moments to O(h^2).
  std::vector<double> binned(n_bins + 1, 0.0);
  const double inv_nh = 1.0 / (static_cast<double>(sample.size()) * h);
  for (double s : sample) {
    const double u = (s - lo) / h;
    auto i = static_cast<std::size_t>(u);
    if (i >= n_bins) i = n_bins - 1;
    const double lam = u - static_cast<double>(i);
    binned[i] += (1.0 - lam) * inv_nh;
    binned[i + 1] += lam * inv_nh;
  }

  const auto reach = static_cast<std::size_t>(std::ceil(8.0 * bandwidth / h));
  std::vector<double> kern_half(reach + 1);
  const double norm = 1.0 / (bandwidth * std::sqrt(2.0 * kPi));
  for (std::size_t j = 0; j <= reach; ++j) {
    const double z = static_cast<double>(j) * h / bandwidth;
    kern_half[j] = norm * std::exp(-0.5 * z * z);
  }
  out.values = convolve_kernel(binned, kern_half, h);
  for (double& v : out.values) v = std::max(v, 0.0);
  return out;
}

double lr_norm_proxy(const DensityEstimate& density, double r) {
  if (!(r >= 1.0)) throw DomainError("lr_norm_proxy: r must be >= 1");
  density.validate();
  std::vector<double> powed(density.values.size());
  for (std::size_t i = 0; i < powed.size(); ++i)
    powed[i] = std::pow(density.values[i], r);
  return trapezoid(powed, density.x[1] - density.x[0]);
}

}  // namespace critsde
