#include "critsde/heat.hpp"

#include <algorithm>
#include <cmath>

#include "critsde/convolve.hpp"
#include "critsde/special.hpp"

namespace critsde {

namespace {
// Sample out to 8.5 standard deviations: exp(-8.5^2/2) ~ 2e-16.
constexpr double kKernelReach = 8.5;

std::size_t kernel_extent(double t, double h, double L) {
  const double radius = std::min(2.0 * L, kKernelReach * std::sqrt(t) + 2.0 * h);
  return static_cast<std::size_t>(std::ceil(radius / h));
}
}  // namespace

std::vector<double> heat_kernel_half(double t, double h, double L) {
  if (!(t > 0.0)) throw DomainError("heat_kernel_half: t > 0 required");
  const std::size_t K = kernel_extent(t, h, L);
  std::vector<double> k(K + 1);
  const double norm = 1.0 / std::sqrt(2.0 * kPi * t);
  for (std::size_t j = 0; j <= K; ++j) {
    const double x = static_cast<double>(j) * h;
    k[j] = norm * std::exp(-x * x / (2.0 * t));
  }
  return k;
}

std::vector<double> grad_heat_kernel_half(double t, double h, double L) {
  if (!(t > 0.0)) throw DomainError("grad_heat_kernel_half: t > 0 required");
  const std::size_t K = kernel_extent(t, h, L);
  std::vector<double> k(K + 1);
  const double norm = 1.0 / std::sqrt(2.0 * kPi * t);
  for (std::size_t j = 0; j <= K; ++j) {
    const double x = static_cast<double>(j) * h;
    k[j] = -(x / t) * norm * std::exp(-x * x / (2.0 * t));
  }
  return k;
}

bool heat_truncation_risk(double t, double L) {
  return std::sqrt(t) > L / 3.0;
}

namespace {
void check_conv_inputs(std::span<const double> slice, double t, double h,
                       double L, const ConvolveOptions& opt) {
  if (!(t > 0.0)) throw DomainError("heat_convolve: t > 0 required");
  if (!(h > 0.0) || !(L > 0.0) || slice.empty())
    throw DomainError("heat_convolve: bad grid");
  if (opt.strict && heat_truncation_risk(t, L))
    throw ResolutionError(
        "heat_convolve: kernel wider than the truncated domain supports "
        "(sqrt(t) > L/3) and strict mode is on");
}
}  // namespace

std::vector<double> heat_convolve(std::span<const double> slice, double t,
                                  double h, double L,
                                  const ConvolveOptions& opt) {
  check_conv_inputs(slice, t, h, L, opt);
  if (t <= h * h) return {slice.begin(), slice.end()};
  return convolve_kernel(slice, heat_kernel_half(t, h, L), h,
                         /*antisymmetric=*/false);
}

std::vector<double> grad_heat_convolve(std::span<const double> slice, double t,
                                       double h, double L,
                                       const ConvolveOptions& opt) {
  check_conv_inputs(slice, t, h, L, opt);
  if (t <= h * h) {
    std::vector<double> out(slice.size(), 0.0);
    for (std::size_t i = 1; i + 1 < slice.size(); ++i)
      out[i] = (slice[i + 1] - slice[i - 1]) / (2.0 * h);
    out.front() = (slice[1] - slice[0]) / h;
    out.back() = (slice[slice.size() - 1] - slice[slice.size() - 2]) / h;
    return out;
  }
  return convolve_kernel(slice, grad_heat_kernel_half(t, h, L), h,
                         /*antisymmetric=*/true);
}

KernelConstants compute_constants(const ExponentPair& exps) {
  exps.require_critical();
  const double p = exps.p, q = exps.q, T = exps.T;
  const auto d = static_cast<double>(exps.dim);
  if (!(p > 1.0))
    throw DomainError("compute_constants: p > 1 required (p' finite)");
  if (!(q > 2.0))
    throw DomainError("compute_constants: q > 2 required at criticality");

  KernelConstants c;
  c.exps = exps;

  const double pp = p / (p - 1.0);  // conjugate exponent p'
  c.c_sup = std::pow(pp, -d / (2.0 * pp)) *
            std::pow(2.0 * kPi, -d / (2.0 * p)) *
            beta_fn(1.0 - 1.0 / q, 1.0 / q + 0.5);

  c.c_grad = std::pow(kPi, -(d + p - 1.0) / (2.0 * p)) *
             std::pow(2.0, (p - d) / (2.0 * p)) *
             std::pow(gamma_fn((2.0 * p - 1.0) / (2.0 * p - 2.0)),
                      (p - 1.0) / p) *
             std::pow((p - 1.0) / p, ((d + 1.0) * p - d) / (2.0 * p)) *
             beta_fn(1.0 - 1.0 / q, 1.0 / q);

  c.c0 = std::max(c.c_sup * std::sqrt(T), c.c_grad);
  c.theta = 2.0 * (q - 1.0) * (q - 2.0) / ((3.0 * q - 2.0) * q);
  return c;
}

}  // namespace critsde
