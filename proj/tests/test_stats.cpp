#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "critsde/common.hpp"
#include "critsde/field.hpp"
#include "critsde/rng.hpp"
#include "critsde/stats.hpp"

using namespace critsde;

namespace {

std::vector<double> normal_sample(std::size_t n, double shift = 0.0,
                                  std::uint64_t seed = 31) {
  std::vector<double> out;
  out.reserve(n);
  for (std::uint64_t path = 0; out.size() < n; ++path) {
    const auto z = PathRng(seed, path).normal_pair(0);
    out.push_back(z[0] + shift);
    if (out.size() < n) out.push_back(z[1] + shift);
  }
  return out;
}

DensityEstimate exact_gaussian_density(std::size_t n_bins = 1601) {
  DensityEstimate d;
  d.x = linspace(-8.0, 8.0, n_bins);
  d.values.resize(n_bins);
  for (std::size_t i = 0; i < n_bins; ++i)
    d.values[i] = std::exp(-0.5 * d.x[i] * d.x[i]) / std::sqrt(2.0 * kPi);
  d.bandwidth = 0.1;
  d.n_samples = n_bins;
  return d;
}

}  // namespace

TEST_CASE("pairwise summation is exact on integers and order insensitive") {
  std::vector<double> v;
  for (int i = 1; i <= 100000; ++i) v.push_back(static_cast<double>(i));
  CHECK(pairwise_sum(v) == 100000.0 * 100001.0 / 2.0);

  std::vector<double> rev(v.rbegin(), v.rend());
  CHECK(pairwise_sum(rev) == pairwise_sum(v));

  // alternating large cancellations stay at machine precision
  std::vector<double> alt;
  for (int i = 0; i < 10000; ++i) {
    alt.push_back(1.0 + 1e-15 * i);
    alt.push_back(-1.0);
  }
  CHECK(pairwise_sum(alt) == doctest::Approx(1e-15 * 9999.0 * 10000.0 / 2.0)
                                 .epsilon(1e-10));
  CHECK(pairwise_sum({}) == 0.0);
}

TEST_CASE("summary statistics match closed forms") {
  const std::vector<double> v{1.0, 2.0, 3.0, 4.0, 5.0};
  const SummaryStats s = summarize(v);
  CHECK(s.n == 5);
  CHECK(s.mean == doctest::Approx(3.0));
  CHECK(s.sd == doctest::Approx(std::sqrt(2.5)).epsilon(1e-12));
  CHECK(s.se == doctest::Approx(std::sqrt(0.5)).epsilon(1e-12));
  CHECK_THROWS_AS((void)summarize(std::vector<double>{}), DomainError);
  CHECK_THROWS_AS(
      (void)summarize(std::vector<double>{1.0, std::nan("")}), DataError);
}

TEST_CASE("ks distance hits its boundary and gaussian-shift values") {
  const std::vector<double> a{1.0, 2.0, 3.0, 4.0};
  CHECK(ks_distance(a, a) == 0.0);
  CHECK(ks_distance(a, {10.0, 11.0, 12.0}) == 1.0);
  CHECK(ks_distance({1.0, 2.0}, {1.5}) == doctest::Approx(0.5));

  // sup_x |Phi(x) - Phi(x - 1/2)| = 2 Phi(1/4) - 1 ~ 0.19741
  const auto x = normal_sample(20000, 0.0, 41);
  const auto y = normal_sample(20000, 0.5, 42);
  const double ks = ks_distance(x, y);
  CHECK(ks == doctest::Approx(0.19741).epsilon(0.15));
  CHECK(ks == ks_distance(y, x));

  // independent same-law samples sit near the noise floor
  const auto z = normal_sample(20000, 0.0, 43);
  CHECK(ks_distance(x, z) < 0.05);
  CHECK_THROWS_AS((void)ks_distance({}, a), DomainError);
}

TEST_CASE("kde recovers a gaussian law from samples") {
  const auto sample = normal_sample(20000, 0.0, 44);
  const DensityEstimate d = kde(sample);
  d.validate();
  CHECK(d.mass() == doctest::Approx(1.0).epsilon(1e-2));
  CHECK(d.bandwidth > 0.05);
  CHECK(d.bandwidth < 0.5);

  double worst = 0.0;
  for (double xq = -3.0; xq <= 3.0; xq += 0.125) {
    const double exact = std::exp(-0.5 * xq * xq) / std::sqrt(2.0 * kPi);
    worst = std::max(worst, std::abs(d.value_at(xq) - exact));
  }
  CHECK(worst < 0.02);
  CHECK(d.value_at(1e6) == 0.0);

  // shifting every sample shifts the estimate, same bandwidth
  std::vector<double> shifted = sample;
  for (double& v : shifted) v += 2.0;
  const DensityEstimate ds = kde(shifted);
  CHECK(ds.bandwidth == doctest::Approx(d.bandwidth).epsilon(1e-12));
  CHECK(ds.value_at(2.0) == doctest::Approx(d.value_at(0.0)).epsilon(1e-6));

  CHECK_THROWS_AS((void)kde(std::vector<double>(50, 1.0)), DomainError);
  CHECK_THROWS_AS((void)kde(std::vector<double>(500, 1.0)), DomainError);
}

TEST_CASE("lr norm proxy matches gaussian closed forms") {
  const DensityEstimate d = exact_gaussian_density();
  // int phi^r = (2 pi)^{-(r-1)/2} r^{-1/2}
  for (double r : {1.0, 2.0, 3.0}) {
    const double exact =
        std::pow(2.0 * kPi, -(r - 1.0) / 2.0) / std::sqrt(r);
    CHECK(lr_norm_proxy(d, r) == doctest::Approx(exact).epsilon(1e-6));
  }
  CHECK(lr_norm_proxy(d, 1.0) == doctest::Approx(d.mass()).epsilon(1e-12));
  CHECK_THROWS_AS((void)lr_norm_proxy(d, 0.5), DomainError);

  // sampled version inherits only the smoothing bias
  const DensityEstimate mc = kde(normal_sample(20000, 0.0, 45));
  CHECK(lr_norm_proxy(mc, 2.0) ==
        doctest::Approx(1.0 / std::sqrt(4.0 * kPi)).epsilon(0.05));
}

TEST_CASE("density estimate validation rejects malformed tables") {
  DensityEstimate d = exact_gaussian_density();
  d.values[3] = -0.5;
  CHECK_THROWS_AS(d.validate(), DataError);

  DensityEstimate half = exact_gaussian_density();
  for (double& v : half.values) v *= 0.5;  // mass 1/2
  CHECK_THROWS_AS(half.validate(), DataError);

  DensityEstimate tiny;
  tiny.x = {0.0};
  tiny.values = {1.0};
  CHECK_THROWS_AS(tiny.validate(), DataError);
}
