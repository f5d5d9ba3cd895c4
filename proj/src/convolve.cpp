#include "critsde/convolve.hpp"

#include <fftw3.h>

#include <cmath>
#include <cstring>
#include <memory>
#include <map>
#include <mutex>

namespace critsde {

namespace {

constexpr std::size_t kDirectLimit = std::size_t{1} << 12;

std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

// One cached FFTW workspace per padded size.  All FFTW traffic is serialized
// behind a single mutex: plan creation is not thread safe, the transforms
// here are short, and determinism matters more than concurrency.
struct FftSlot {
  std::size_t n = 0;
  double* rbuf = nullptr;
  fftw_complex* cbuf = nullptr;
  fftw_complex* kbuf = nullptr;
  fftw_plan fwd{}, inv{};

  explicit FftSlot(std::size_t size) : n(size) {
    rbuf = fftw_alloc_real(n);
    cbuf = fftw_alloc_complex(n / 2 + 1);
    kbuf = fftw_alloc_complex(n / 2 + 1);
    fwd = fftw_plan_dft_r2c_1d(static_cast<int>(n), rbuf, cbuf, FFTW_ESTIMATE);
    inv = fftw_plan_dft_c2r_1d(static_cast<int>(n), cbuf, rbuf, FFTW_ESTIMATE);
  }
  ~FftSlot() {
    fftw_destroy_plan(fwd);
    fftw_destroy_plan(inv);
    fftw_free(rbuf);
    fftw_free(cbuf);
    fftw_free(kbuf);
  }
  FftSlot(const FftSlot&) = delete;
  FftSlot& operator=(const FftSlot&) = delete;
};

std::mutex g_fft_mutex;
std::map<std::size_t, std::unique_ptr<FftSlot>>& fft_cache() {
  static std::map<std::size_t, std::unique_ptr<FftSlot>> cache;
  return cache;
}

std::vector<double> convolve_direct(std::span<const double> data,
                                    std::span<const double> kern_half,
                                    double h, bool antisym) {
  const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(data.size());
  const std::ptrdiff_t K = static_cast<std::ptrdiff_t>(kern_half.size()) - 1;
  std::vector<double> out(data.size(), 0.0);
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    double acc = (antisym ? 0.0 : kern_half[0] * data[i]);
    for (std::ptrdiff_t j = 1; j <= K; ++j) {
      const double right = (i - j >= 0) ? data[i - j] : 0.0;  // k(+jh) side
      const double left = (i + j < n) ? data[i + j] : 0.0;    // k(-jh) side
      acc += kern_half[j] * (antisym ? (right - left) : (right + left));
    }
    out[i] = acc * h;
  }
  return out;
}

std::vector<double> convolve_fft(std::span<const double> data,
                                 std::span<const double> kern_half, double h,
                                 bool antisym) {
  const std::size_t n = data.size();
  const std::size_t K = kern_half.size() - 1;
  const std::size_t P = next_pow2(n + 2 * K + 1);
  std::lock_guard<std::mutex> lock(g_fft_mutex);
  auto& slot_ptr = fft_cache()[P];
  if (!slot_ptr) slot_ptr = std::make_unique<FftSlot>(P);
  FftSlot& s = *slot_ptr;

  // Kernel, wrapped circularly: index j holds k(j*h), index P-j holds k(-j*h).
  std::memset(s.rbuf, 0, P * sizeof(double));
  s.rbuf[0] = antisym ? 0.0 : kern_half[0];
  for (std::size_t j = 1; j <= K; ++j) {
    s.rbuf[j] = kern_half[j];
    s.rbuf[P - j] = antisym ? -kern_half[j] : kern_half[j];
  }
  fftw_execute(s.fwd);
  std::memcpy(s.kbuf, s.cbuf, (P / 2 + 1) * sizeof(fftw_complex));

  std::memset(s.rbuf, 0, P * sizeof(double));
  std::memcpy(s.rbuf, data.data(), n * sizeof(double));
  fftw_execute(s.fwd);
  for (std::size_t k = 0; k <= P / 2; ++k) {
    const double ar = s.cbuf[k][0], ai = s.cbuf[k][1];
    const double br = s.kbuf[k][0], bi = s.kbuf[k][1];
    s.cbuf[k][0] = ar * br - ai * bi;
    s.cbuf[k][1] = ar * bi + ai * br;
  }
  fftw_execute(s.inv);

  std::vector<double> out(n);
  const double scale = h / static_cast<double>(P);
  for (std::size_t i = 0; i < n; ++i) out[i] = s.rbuf[i] * scale;
  return out;
}

}  // namespace

std::vector<double> convolve_kernel(std::span<const double> data,
                                    std::span<const double> kern_half,
                                    double h, bool antisymmetric,
                                    ConvPath path) {
  if (data.empty() || kern_half.empty())
    throw DomainError("convolve_kernel: empty input");
  if (!(h > 0.0)) throw DomainError("convolve_kernel: h > 0 required");
  if (path == ConvPath::automatic)
    path = data.size() < kDirectLimit ? ConvPath::direct : ConvPath::fft;
  return path == ConvPath::direct
             ? convolve_direct(data, kern_half, h, antisymmetric)
             : convolve_fft(data, kern_half, h, antisymmetric);
}

}  // namespace critsde
