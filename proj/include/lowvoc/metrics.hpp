#ifndef LOWVOC_METRICS_HPP
#define LOWVOC_METRICS_HPP

#include <cmath>
#include <cstdint>
#include <vector>

#include "lowvoc/error.hpp"
#include "lowvoc/frontend.hpp"
#include "lowvoc/generator.hpp"
#include "lowvoc/losses.hpp"
#include "lowvoc/tensor.hpp"

namespace lowvoc {

// Mel-cepstral distance. Cepstra are the orthonormal DCT-II of the log-Mel
// vector; frames align by index (vocoder output is time-aligned with its
// input, so no DTW). c0 carries overall energy and is excluded by default.
struct McdConfig {
  int order = 13;          // D, coefficients c_1..c_D
  bool include_c0 = false;
};

struct McdResult {
  double db = 0.0;
  int64_t frames = 0;
  bool truncated = false;  // inputs had different lengths
};

// Orthonormal DCT-II: c_d = s_d * sum_m x[m] cos(pi d (m + 0.5) / M).
inline std::vector<double> dct2_ortho(const double* x, int m_count) {
  std::vector<double> c(static_cast<size_t>(m_count));
  const double pi = 3.14159265358979323846;
  for (int d = 0; d < m_count; ++d) {
    double acc = 0;
    for (int m = 0; m < m_count; ++m)
      acc += x[m] * std::cos(pi * d * (m + 0.5) / m_count);
    const double scale = d == 0 ? std::sqrt(1.0 / m_count) : std::sqrt(2.0 / m_count);
    c[static_cast<size_t>(d)] = scale * acc;
  }
  return c;
}

template <class S>
McdResult mcd(const std::vector<S>& ref, const std::vector<S>& hyp, const FrontendConfig& fc,
              const McdConfig& mc = {}) {
  require(mc.order >= 1 && mc.order < fc.mel_bands, ErrorCode::invalid_config,
          "cepstral order must be in [1, mel_bands)");
  McdResult out;
  const size_t n = std::min(ref.size(), hyp.size());
  out.truncated = ref.size() != hyp.size();
  std::vector<double> a(ref.begin(), ref.begin() + static_cast<std::ptrdiff_t>(n));
  std::vector<double> b(hyp.begin(), hyp.begin() + static_cast<std::ptrdiff_t>(n));
  const Tensor<double> ma = wav2mel(a, fc);
  const Tensor<double> mb = wav2mel(b, fc);
  const int m_count = fc.mel_bands;
  const int d_lo = mc.include_c0 ? 0 : 1;
  const double k = 10.0 / std::log(10.0);
  double acc = 0;
  for (int64_t t = 0; t < ma.shape[0]; ++t) {
    const std::vector<double> ca = dct2_ortho(ma.data() + t * m_count, m_count);
    const std::vector<double> cb = dct2_ortho(mb.data() + t * m_count, m_count);
    double sq = 0;
    for (int d = d_lo; d <= mc.order; ++d) {
      const double diff = ca[static_cast<size_t>(d)] - cb[static_cast<size_t>(d)];
      sq += diff * diff;
    }
    acc += k * std::sqrt(2.0 * sq);
  }
  out.frames = ma.shape[0];
  out.db = acc / static_cast<double>(out.frames);
  return out;
}

// Mel-L1 between two waves through the same front end (truncates to the
// shorter wave first).
template <class S>
double mel_l1_metric(const std::vector<S>& ref, const std::vector<S>& hyp,
                     const FrontendConfig& fc) {
  const size_t n = std::min(ref.size(), hyp.size());
  std::vector<S> a(ref.begin(), ref.begin() + static_cast<std::ptrdiff_t>(n));
  std::vector<S> b(hyp.begin(), hyp.begin() + static_cast<std::ptrdiff_t>(n));
  return mel_l1(wav2mel(a, fc), wav2mel(b, fc));
}

// Analytic per-layer FLOP count for one second of output audio.
// Conventions: conv / transposed conv cost 2 FLOPs per multiply-accumulate
// plus one add per output element for the bias; a transposed conv performs
// in_len * cin * cout * k MACs (each input sample meets each tap once);
// snake costs 6 FLOPs per element, tanh 1, residual add 1. Padding does not
// change any count, so causal and non-causal totals are identical.
struct FlopsBreakdown {
  double total = 0;
  double conv = 0;
  double activation = 0;

  double gflops() const { return total * 1e-9; }
};

inline FlopsBreakdown count_flops(const GeneratorConfig& cfg, int sample_rate_hz) {
  validate(cfg);
  FlopsBreakdown fb;
  const double frames = static_cast<double>(sample_rate_hz) / cfg.frame_shift;
  auto conv_cost = [&](double out_len, double cin, double cout, double k) {
    fb.conv += out_len * cout * (2.0 * cin * k + 1.0);
  };
  auto tconv_cost = [&](double in_len, double cin, double cout, double k, double stride) {
    fb.conv += in_len * cin * cout * k * 2.0 + in_len * stride * cout;
  };
  auto snake_cost = [&](double len, double ch) { fb.activation += 6.0 * len * ch; };

  double len = frames;
  int ch = cfg.base_channels;
  conv_cost(len, cfg.mel_bands, ch, cfg.io_kernel);
  for (size_t i = 0; i < cfg.stride_setup.size(); ++i) {
    const int stride = cfg.stride_setup[i];
    const int out_ch = std::max(1, ch / 2);
    tconv_cost(len, ch, out_ch, cfg.stage_kernel(i), stride);
    len *= stride;
    ch = out_ch;
    for (size_t j = 0; j < cfg.stage_dilations(i).size(); ++j) {
      snake_cost(len, ch);
      conv_cost(len, ch, ch, 3);
      snake_cost(len, ch);
      conv_cost(len, ch, ch, 3);
      fb.activation += len * ch;  // residual add
    }
  }
  snake_cost(len, ch);
  conv_cost(len, ch, 1, cfg.io_kernel);
  fb.activation += len;  // final tanh
  fb.total = fb.conv + fb.activation;
  return fb;
}

}  // namespace lowvoc

#endif  // LOWVOC_METRICS_HPP
