#pragma once

#include <span>
#include <vector>

#include "critsde/common.hpp"
#include "critsde/field.hpp"

namespace critsde {

// Gaussian heat kernel K(t,x) = (2 pi t)^{-1/2} exp(-x^2/(2t)) (variance t,
// one space dimension) and its spatial derivative.

// Kernel samples K(t, j*h), j = 0..K, truncated where the tail is below
// machine noise (|x| > ~8.5 sqrt(t)) or at the domain edge.
std::vector<double> heat_kernel_half(double t, double h, double L);
std::vector<double> grad_heat_kernel_half(double t, double h, double L);

// True when the kernel width is large enough relative to the domain that the
// truncated convolution visibly loses mass (sqrt(t) > L/3).
bool heat_truncation_risk(double t, double L);

struct ConvolveOptions {
  bool strict = false;  // escalate the truncation warning to an error
};

// Slice convolution with K(t, .) (resp. dK/dx).  t <= 0 is a domain error.
// Kernels narrower than one grid cell (t <= h^2) are below grid scale; the
// operator then degenerates to the identity (resp. a centered difference),
// which is the correct small-t limit on the grid.
std::vector<double> heat_convolve(std::span<const double> slice, double t,
                                  double h, double L,
                                  const ConvolveOptions& opt = {});
std::vector<double> grad_heat_convolve(std::span<const double> slice, double t,
                                       double h, double L,
                                       const ConvolveOptions& opt = {});

// Explicit constants of the weighted estimates at criticality
// (2/q + d/p = 1, q > 2, p > 1):
//   c_sup:  |u(t)| <= c_sup * t^{1/2} * sup_s s^{1/q}||f(s)||_p
//           with c_sup = p'^{-d/(2p')} (2 pi)^{-d/(2p)} B(1 - 1/q, 1/q + 1/2)
//   c_grad: |grad u| <= c_grad * sup_s s^{1/q}||f(s)||_p, the closed form
//           pi^{-(d+p-1)/(2p)} 2^{(p-d)/(2p)} Gamma((2p-1)/(2p-2))^{(p-1)/p}
//           ((p-1)/p)^{((d+1)p-d)/(2p)} B(1 - 1/q, 1/q)
//   c0   = max(c_sup * sqrt(T), c_grad), the W^{1,inf} constant
//   theta = 2(q-1)(q-2) / ((3q-2) q), the time-Hoelder exponent.
struct KernelConstants {
  ExponentPair exps;
  double c_sup = 0.0;
  double c_grad = 0.0;
  double c0 = 0.0;
  double theta = 0.0;
};
KernelConstants compute_constants(const ExponentPair& exps);

}  // namespace critsde
