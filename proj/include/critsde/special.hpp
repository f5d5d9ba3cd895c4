#pragma once

namespace critsde {

// Gamma and Beta evaluation.  A Lanczos approximation (g = 7, 9 terms) is
// used instead of std::tgamma so the explicit constants of the gradient
// estimate are bit-stable across platforms; relative error is <= 1e-12 on
// the arguments that occur here (all in (0, 20)).  Tests cross-check against
// both libm and an integral quadrature oracle.
double log_gamma(double x);
double gamma_fn(double x);
double beta_fn(double a, double b);

// Standard normal CDF (used by oracles and the Feller probe references).
double normal_cdf(double x);

}  // namespace critsde
