#ifndef LOWVOC_FRONTEND_HPP
#define LOWVOC_FRONTEND_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "lowvoc/error.hpp"
#include "lowvoc/fft.hpp"
#include "lowvoc/tensor.hpp"

namespace lowvoc {

// Analysis front end: framing, periodic Hann window, DFT power spectrum,
// Slaney-normalized Mel filter bank, natural log with clamp floor.
//
// Conventions (fixed for the whole engine):
//   - "valid" framing, frame t covers samples [t*Ns, t*Ns + Nw), no padding;
//   - power bin k = |sum_n w[n] x[n] e^{-j2pi kn/K}|^2 for k in [0, K/2];
//   - mel(f) = 2595 log10(1 + f/700), filter centers uniform on that scale;
//   - out[t][m] = ln(max(filterbank * power_t, log_floor)).
struct FrontendConfig {
  int sample_rate_hz = 16000;
  int window_len = 512;   // Nw
  int frame_shift = 128;  // Ns
  int dft_size = 512;     // K, power of two, >= Nw
  int mel_bands = 80;     // M
  double fmin_hz = 0.0;
  double fmax_hz = 8000.0;
  double log_floor = 1e-5;
};

inline void validate(const FrontendConfig& c) {
  require(c.sample_rate_hz > 0, ErrorCode::invalid_config, "sample_rate_hz must be positive");
  require(c.window_len >= 2 && c.window_len % 2 == 0, ErrorCode::invalid_config,
          "window_len must be even and >= 2");
  require(c.frame_shift >= 1, ErrorCode::invalid_config, "frame_shift must be >= 1");
  require(c.dft_size >= c.window_len, ErrorCode::invalid_config, "dft_size must be >= window_len");
  require(is_pow2(c.dft_size), ErrorCode::invalid_config, "dft_size must be a power of two");
  require(c.mel_bands >= 1, ErrorCode::invalid_config, "mel_bands must be >= 1");
  require(c.mel_bands <= c.dft_size / 2 + 1, ErrorCode::invalid_config,
          "mel_bands exceeds available DFT bins");
  require(c.fmin_hz >= 0.0 && c.fmin_hz < c.fmax_hz &&
              c.fmax_hz <= 0.5 * c.sample_rate_hz,
          ErrorCode::invalid_config, "need 0 <= fmin < fmax <= sample_rate/2");
  require(c.log_floor > 0.0, ErrorCode::invalid_config, "log_floor must be positive");
}

// Periodic Hann: w[n] = 0.5 (1 - cos(2 pi n / Nw)), n in [0, Nw).
template <class S>
std::vector<S> hann_window(int nw) {
  require(nw >= 2 && nw % 2 == 0, ErrorCode::invalid_config,
          "hann window length must be even and >= 2");
  std::vector<S> w(static_cast<size_t>(nw));
  for (int n = 0; n < nw; ++n)
    w[static_cast<size_t>(n)] =
        static_cast<S>(0.5 * (1.0 - std::cos(2.0 * 3.14159265358979323846 * n / nw)));
  return w;
}

inline int64_t frame_count(int64_t wave_len, const FrontendConfig& c) {
  require(wave_len >= c.window_len, ErrorCode::too_short,
          "waveform shorter than one analysis window");
  return (wave_len - c.window_len) / c.frame_shift + 1;
}

// Frames as a [T, Nw] matrix; frame t covers samples [t*Ns, t*Ns + Nw).
template <class S>
Tensor<S> frame_signal(const std::vector<S>& wave, const FrontendConfig& c) {
  validate(c);
  const int64_t t_count = frame_count(static_cast<int64_t>(wave.size()), c);
  Tensor<S> frames({t_count, c.window_len});
  for (int64_t t = 0; t < t_count; ++t) {
    const S* src = wave.data() + t * c.frame_shift;
    std::copy(src, src + c.window_len, frames.data() + t * c.window_len);
  }
  return frames;
}

// Squared amplitude spectrum of one windowed, zero-padded frame.
template <class S>
std::vector<S> dft_power(const S* frame, int nw, const std::vector<S>& window, int dft_size) {
  require(nw <= dft_size, ErrorCode::invalid_config, "frame longer than dft size");
  require(static_cast<int>(window.size()) == nw, ErrorCode::shape_mismatch,
          "window length mismatch");
  std::vector<S> wx(static_cast<size_t>(nw));
  for (int n = 0; n < nw; ++n) wx[static_cast<size_t>(n)] = window[static_cast<size_t>(n)] * frame[n];
  std::vector<S> re, im;
  real_dft_onesided(wx.data(), nw, dft_size, re, im);
  std::vector<S> power(re.size());
  for (size_t k = 0; k < re.size(); ++k) power[k] = re[k] * re[k] + im[k] * im[k];
  return power;
}

inline double hz_to_mel(double f) { return 2595.0 * std::log10(1.0 + f / 700.0); }
inline double mel_to_hz(double m) { return 700.0 * (std::pow(10.0, m / 2595.0) - 1.0); }

// M triangular filters over the one-sided bins, centers uniform on the mel
// scale, each row scaled by 2/(f_hi - f_lo) (Slaney area normalization).
template <class S>
Tensor<S> mel_filterbank(const FrontendConfig& c) {
  validate(c);
  const int bins = c.dft_size / 2 + 1;
  const int m_count = c.mel_bands;
  const double mel_lo = hz_to_mel(c.fmin_hz);
  const double mel_hi = hz_to_mel(c.fmax_hz);
  std::vector<double> edges(static_cast<size_t>(m_count) + 2);
  for (int i = 0; i < m_count + 2; ++i)
    edges[static_cast<size_t>(i)] =
        mel_to_hz(mel_lo + (mel_hi - mel_lo) * i / (m_count + 1));

  Tensor<S> fb({m_count, bins});
  for (int m = 0; m < m_count; ++m) {
    const double lo = edges[static_cast<size_t>(m)];
    const double center = edges[static_cast<size_t>(m) + 1];
    const double hi = edges[static_cast<size_t>(m) + 2];
    const double norm = 2.0 / (hi - lo);
    for (int k = 0; k < bins; ++k) {
      const double f = static_cast<double>(c.sample_rate_hz) * k / c.dft_size;
      double w = 0.0;
      if (f > lo && f < center)
        w = (f - lo) / (center - lo);
      else if (f >= center && f < hi)
        w = (hi - f) / (hi - center);
      fb.v[static_cast<size_t>(m) * bins + static_cast<size_t>(k)] = static_cast<S>(w * norm);
    }
  }
  return fb;
}

// Log-Mel spectrogram, [T, M].
template <class S>
Tensor<S> wav2mel(const std::vector<S>& wave, const FrontendConfig& c) {
  validate(c);
  const int64_t t_count = frame_count(static_cast<int64_t>(wave.size()), c);
  const std::vector<S> window = hann_window<S>(c.window_len);
  const Tensor<S> fb = mel_filterbank<S>(c);
  const int bins = c.dft_size / 2 + 1;
  const S floor_v = static_cast<S>(c.log_floor);

  Tensor<S> mel({t_count, c.mel_bands});
  for (int64_t t = 0; t < t_count; ++t) {
    const std::vector<S> power =
        dft_power(wave.data() + t * c.frame_shift, c.window_len, window, c.dft_size);
    for (int m = 0; m < c.mel_bands; ++m) {
      const S* row = fb.data() + static_cast<int64_t>(m) * bins;
      S acc = 0;
      for (int k = 0; k < bins; ++k) acc += row[static_cast<size_t>(k)] * power[static_cast<size_t>(k)];
      mel.v[static_cast<size_t>(t * c.mel_bands + m)] =
          std::log(std::max(acc, floor_v));
    }
  }
  return mel;
}

}  // namespace lowvoc

#endif  // LOWVOC_FRONTEND_HPP
