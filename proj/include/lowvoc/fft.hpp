#ifndef LOWVOC_FFT_HPP
#define LOWVOC_FFT_HPP

#include <cmath>
#include <cstdint>
#include <vector>

#include "lowvoc/error.hpp"

namespace lowvoc {

inline bool is_pow2(int64_t n) { return n > 0 && (n & (n - 1)) == 0; }

// In-place iterative radix-2 complex DFT, X_k = sum_n x_n e^{-j 2 pi k n / N}.
// re/im hold N entries. inverse=true computes the unnormalized inverse
// transform (positive exponent, no 1/N factor).
template <class S>
void fft_radix2(S* re, S* im, int64_t n, bool inverse) {
  require(is_pow2(n), ErrorCode::invalid_config, "fft size must be a power of two");
  // Bit-reversal permutation.
  for (int64_t i = 1, j = 0; i < n; ++i) {
    int64_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) {
      std::swap(re[i], re[j]);
      std::swap(im[i], im[j]);
    }
  }
  const double sign = inverse ? 1.0 : -1.0;
  for (int64_t len = 2; len <= n; len <<= 1) {
    const double ang = sign * 2.0 * 3.14159265358979323846 / static_cast<double>(len);
    // Twiddles computed per step from double trig; identical for both scalar
    // widths up to the final cast.
    const double wr0 = std::cos(ang), wi0 = std::sin(ang);
    for (int64_t i = 0; i < n; i += len) {
      double wr = 1.0, wi = 0.0;
      for (int64_t k = 0; k < len / 2; ++k) {
        const double ur = re[i + k], ui = im[i + k];
        const double vr = re[i + k + len / 2] * wr - im[i + k + len / 2] * wi;
        const double vi = re[i + k + len / 2] * wi + im[i + k + len / 2] * wr;
        re[i + k] = static_cast<S>(ur + vr);
        im[i + k] = static_cast<S>(ui + vi);
        re[i + k + len / 2] = static_cast<S>(ur - vr);
        im[i + k + len / 2] = static_cast<S>(ui - vi);
        const double nwr = wr * wr0 - wi * wi0;
        wi = wr * wi0 + wi * wr0;
        wr = nwr;
      }
    }
  }
}

// One-sided spectrum of a real frame zero-padded to dft_size.
// Writes dft_size/2+1 (re, im) pairs.
template <class S>
void real_dft_onesided(const S* x, int64_t x_len, int64_t dft_size,
                       std::vector<S>& re, std::vector<S>& im) {
  re.assign(static_cast<size_t>(dft_size), S(0));
  im.assign(static_cast<size_t>(dft_size), S(0));
  for (int64_t i = 0; i < x_len; ++i) re[static_cast<size_t>(i)] = x[i];
  fft_radix2(re.data(), im.data(), dft_size, false);
  re.resize(static_cast<size_t>(dft_size / 2 + 1));
  im.resize(static_cast<size_t>(dft_size / 2 + 1));
}

}  // namespace lowvoc

#endif  // LOWVOC_FFT_HPP
