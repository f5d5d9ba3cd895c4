#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace critsde {

// Order-insensitive (pairwise) summation: parallel and serial reductions of
// the same sample vector agree to near machine precision.
double pairwise_sum(std::span<const double> values);

struct SummaryStats {
  std::size_t n = 0;
  double mean = 0.0;
  double sd = 0.0;  // sample standard deviation (n - 1)
  double se = 0.0;  // sd / sqrt(n)
};
SummaryStats summarize(std::span<const double> sample);

// Two-sample Kolmogorov-Smirnov statistic: sup |F_a - F_b| over the merged
// sample.  Symmetric, in [0, 1], zero iff the empirical laws coincide.
double ks_distance(std::vector<double> a, std::vector<double> b);

// Gaussian-kernel density estimate on an automatic uniform grid via linear
// binning; mass is one up to quadrature and far-tail truncation error.
struct DensityEstimate {
  std::vector<double> x;
  std::vector<double> values;
  double bandwidth = 0.0;
  std::size_t n_samples = 0;

  double mass() const;
  double value_at(double xq) const;  // linear interpolation, zero outside
  void validate() const;             // values >= 0, mass within 1e-2 of 1
};

// bandwidth = 0 selects the Silverman rule 1.06 min(sd, iqr/1.349) n^{-1/5}.
DensityEstimate kde(const std::vector<double>& sample, std::size_t n_bins = 512,
                    double bandwidth = 0.0);

// Trapezoid value of int |p(y)|^r dy on the estimate grid; the finiteness
// proxy is stability of this value under grid refinement.
double lr_norm_proxy(const DensityEstimate& density, double r);

}  // namespace critsde
