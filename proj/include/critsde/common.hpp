#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace critsde {

// Error taxonomy.  Callers (and the CLI) distinguish bad inputs from
// resolution problems and from iteration failures; everything carries a
// human-readable diagnostic.
struct DomainError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
struct DataError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
struct ResolutionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ConvergenceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline constexpr double kPi = 3.14159265358979323846264338327950288;

// Integrability exponents (p in space, q in time) on horizon T in dimension
// dim.  The critical relation is 2/q + dim/p = 1.
struct ExponentPair {
  double p = 2.0;
  double q = 4.0;
  int dim = 1;
  double T = 1.0;

  bool is_critical(double tol = 1e-12) const {
    return std::abs(2.0 / q + static_cast<double>(dim) / p - 1.0) <= tol;
  }
  // Weight carried by the time slice at t: t^{1/q}.
  double weight(double t) const { return std::pow(t, 1.0 / q); }

  void validate() const {
    if (!(p >= 1.0) || !(q >= 1.0) || dim < 1 || !(T > 0.0))
      throw DomainError("ExponentPair: need p,q >= 1, dim >= 1, T > 0");
  }
  void require_critical() const {
    validate();
    if (!is_critical())
      throw DomainError("ExponentPair: 2/q + d/p = 1 required (got p=" +
                        std::to_string(p) + ", q=" + std::to_string(q) +
                        ", d=" + std::to_string(dim) + ")");
  }
};

inline bool all_finite(const std::vector<double>& v) {
  for (double x : v)
    if (!std::isfinite(x)) return false;
  return true;
}

}  // namespace critsde
