#pragma once

#include <span>
#include <vector>

#include "critsde/common.hpp"

namespace critsde {

enum class ConvPath { automatic, direct, fft };

// Discrete linear convolution with a sampled kernel:
//   out_i = h * sum_{j=-K..K} k(j*h) * data_{i-j},
// zero padding outside the data range.  kern_half[j] = k(j*h) for j = 0..K;
// the negative side is k(-x) = k(x) (symmetric) or -k(x) (antisymmetric,
// with k(0) forced to 0).  Path selection per the build policy: direct
// summation below 2^12 data points, FFT (zero-padded circular, FFTW) above;
// both compute the same discrete sum and agree to 1e-10.
std::vector<double> convolve_kernel(std::span<const double> data,
                                    std::span<const double> kern_half,
                                    double h, bool antisymmetric = false,
                                    ConvPath path = ConvPath::automatic);

}  // namespace critsde
