#ifndef LOWVOC_GENERATOR_HPP
#define LOWVOC_GENERATOR_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "lowvoc/error.hpp"
#include "lowvoc/frontend.hpp"
#include "lowvoc/graph.hpp"
#include "lowvoc/kernels.hpp"
#include "lowvoc/rng.hpp"
#include "lowvoc/tensor.hpp"

namespace lowvoc {

// Mel-to-waveform generator: input conv, one transposed-conv upsampling stage
// per stride, residual blocks with snake activations, output conv + tanh.
// The causal flag switches every convolution between left-only and symmetric
// padding; structure and parameter count are identical in both modes.
struct GeneratorConfig {
  std::vector<int> stride_setup = {8, 4, 2, 2};
  bool causal = true;
  int base_channels = 32;
  std::vector<int> kernel_sizes;                  // per stage; default 2*stride
  std::vector<std::vector<int>> resblock_dilations = {{1, 3}};  // per stage (last repeats)
  int mel_bands = 80;
  int frame_shift = 128;  // frontend Ns this generator pairs with
  int io_kernel = 7;      // input/output conv kernel

  int upsample_factor() const {
    int p = 1;
    for (int s : stride_setup) p *= s;
    return p;
  }
  int stage_kernel(size_t i) const {
    if (i < kernel_sizes.size()) return kernel_sizes[i];
    return 2 * stride_setup[i];
  }
  const std::vector<int>& stage_dilations(size_t i) const {
    if (i < resblock_dilations.size()) return resblock_dilations[i];
    return resblock_dilations.back();
  }
  int stage_channels(size_t i) const {  // channels entering stage i
    int c = base_channels;
    for (size_t k = 0; k < i; ++k) c = std::max(1, c / 2);
    return c;
  }
};

inline void validate(const GeneratorConfig& c) {
  require(!c.stride_setup.empty(), ErrorCode::invalid_config, "stride setup empty");
  for (int s : c.stride_setup)
    require(s >= 1, ErrorCode::invalid_config, "strides must be >= 1");
  require(c.upsample_factor() == c.frame_shift, ErrorCode::invalid_config,
          "product of strides (" + std::to_string(c.upsample_factor()) +
              ") must equal frame shift (" + std::to_string(c.frame_shift) + ")");
  for (size_t i = 0; i < c.stride_setup.size(); ++i)
    require(c.stage_kernel(i) >= c.stride_setup[i], ErrorCode::invalid_config,
            "upsampling kernel must be >= stride");
  require(c.base_channels >= 1 && c.mel_bands >= 1 && c.io_kernel >= 1,
          ErrorCode::invalid_config, "bad generator dimensions");
  require(!c.resblock_dilations.empty(), ErrorCode::invalid_config, "need resblock dilations");
}

template <class S>
struct Generator {
  GeneratorConfig cfg;
  ParamSet<S> params;

  // flat views into `params`, resolved by name at build/load time
  struct Res {
    ParamPtr<S> a1, c1w, c1b, a2, c2w, c2b;
    int dilation = 1;
  };
  struct Stage {
    ParamPtr<S> up_w, up_b;
    std::vector<Res> res;
  };
  ParamPtr<S> pre_w, pre_b, post_alpha, post_w, post_b;
  std::vector<Stage> stages;

  Pad pad_mode() const { return cfg.causal ? Pad::causal : Pad::same; }
};

// Deterministic construction: weights ~ N(0, 0.01^2) drawn in declaration
// order from the seed, biases zero, snake alphas one.
template <class S>
Generator<S> build_generator(const GeneratorConfig& cfg, uint64_t seed) {
  validate(cfg);
  Generator<S> g;
  g.cfg = cfg;
  Rng rng(seed);
  const double sigma = 0.01;

  auto weight = [&](const std::string& name, std::vector<int64_t> shape) {
    auto p = g.params.make(name, std::move(shape));
    detail::init_normal(rng, p->value, sigma);
    return p;
  };
  auto bias = [&](const std::string& name, int64_t n) {
    return g.params.make(name, {n});
  };
  auto alpha = [&](const std::string& name, int64_t n) {
    auto p = g.params.make(name, {n});
    p->value.fill(S(1));
    return p;
  };

  int ch = cfg.base_channels;
  g.pre_w = weight("gen.pre.w", {ch, cfg.mel_bands, cfg.io_kernel});
  g.pre_b = bias("gen.pre.b", ch);
  for (size_t i = 0; i < cfg.stride_setup.size(); ++i) {
    typename Generator<S>::Stage st;
    const int out_ch = std::max(1, ch / 2);
    const int k = cfg.stage_kernel(i);
    const std::string p = "gen.stage" + std::to_string(i);
    st.up_w = weight(p + ".up.w", {out_ch, ch, k});
    st.up_b = bias(p + ".up.b", out_ch);
    const auto& dils = cfg.stage_dilations(i);
    for (size_t j = 0; j < dils.size(); ++j) {
      typename Generator<S>::Res r;
      r.dilation = dils[j];
      const std::string q = p + ".res" + std::to_string(j);
      r.a1 = alpha(q + ".a1", out_ch);
      r.c1w = weight(q + ".c1.w", {out_ch, out_ch, 3});
      r.c1b = bias(q + ".c1.b", out_ch);
      r.a2 = alpha(q + ".a2", out_ch);
      r.c2w = weight(q + ".c2.w", {out_ch, out_ch, 3});
      r.c2b = bias(q + ".c2.b", out_ch);
      st.res.push_back(std::move(r));
    }
    g.stages.push_back(std::move(st));
    ch = out_ch;
  }
  g.post_alpha = alpha("gen.post.alpha", ch);
  g.post_w = weight("gen.post.w", {1, ch, cfg.io_kernel});
  g.post_b = bias("gen.post.b", 1);
  return g;
}

// Rebinds the structure views after loading parameter values by name.
template <class S>
Generator<S> generator_from_params(const GeneratorConfig& cfg, const ParamSet<S>& loaded) {
  Generator<S> g = build_generator<S>(cfg, 0);
  for (auto& p : g.params.items) {
    auto src = loaded.find(p->name);
    require(src != nullptr, ErrorCode::integrity, "missing generator parameter " + p->name);
    require(src->value.shape == p->value.shape, ErrorCode::integrity,
            "parameter shape mismatch for " + p->name);
    p->value.v = src->value.v;
  }
  return g;
}

// Offline forward through the shared kernels. mel: [T, M] (frontend layout).
// Output length is exactly T * upsample_factor in both modes.
template <class S>
std::vector<S> generator_forward(const Generator<S>& g, const Tensor<S>& mel) {
  require(mel.rank() == 2 && mel.shape[1] == g.cfg.mel_bands, ErrorCode::shape_mismatch,
          "mel band count does not match generator config");
  const int64_t t_count = mel.shape[0];
  const int64_t m = g.cfg.mel_bands;
  const Pad pad = g.pad_mode();

  // [T, M] -> [M, T]
  Tensor<S> x({m, t_count});
  for (int64_t t = 0; t < t_count; ++t)
    for (int64_t b = 0; b < m; ++b) x.v[static_cast<size_t>(b * t_count + t)] = mel.v[static_cast<size_t>(t * m + b)];

  auto conv = [&](const Tensor<S>& in, const ParamPtr<S>& w, const ParamPtr<S>& b,
                  int dilation) {
    Tensor<S> out({w->value.shape[0],
                   conv1d_out_len(in.shape[1], static_cast<int>(w->value.shape[2]), 1, dilation, pad)});
    conv1d_fwd(in.data(), in.shape[0], in.shape[1], w->value.data(), w->value.shape[0],
               static_cast<int>(w->value.shape[2]), 1, dilation, pad, b->value.data(), out.data());
    return out;
  };
  auto snake_t = [&](const Tensor<S>& in, const ParamPtr<S>& a) {
    Tensor<S> out(in.shape);
    const int64_t per = in.numel() / in.shape[0];
    for (int64_t c = 0; c < in.shape[0]; ++c)
      for (int64_t i = 0; i < per; ++i)
        out.v[static_cast<size_t>(c * per + i)] =
            snake_val(in.v[static_cast<size_t>(c * per + i)], a->value.v[static_cast<size_t>(c)]);
    return out;
  };

  Tensor<S> h = conv(x, g.pre_w, g.pre_b, 1);
  for (size_t i = 0; i < g.stages.size(); ++i) {
    const auto& st = g.stages[i];
    const int stride = g.cfg.stride_setup[i];
    Tensor<S> up({st.up_w->value.shape[0], h.shape[1] * stride});
    conv_transpose1d_fwd(h.data(), h.shape[0], h.shape[1], st.up_w->value.data(),
                         st.up_w->value.shape[0], static_cast<int>(st.up_w->value.shape[2]),
                         stride, pad, st.up_b->value.data(), up.data());
    h = std::move(up);
    for (const auto& r : st.res) {
      Tensor<S> t1 = conv(snake_t(h, r.a1), r.c1w, r.c1b, r.dilation);
      Tensor<S> t2 = conv(snake_t(t1, r.a2), r.c2w, r.c2b, 1);
      for (size_t k = 0; k < h.v.size(); ++k) h.v[k] += t2.v[k];
    }
  }
  Tensor<S> out = conv(snake_t(h, g.post_alpha), g.post_w, g.post_b, 1);
  std::vector<S> wave(out.v.size());
  for (size_t i = 0; i < out.v.size(); ++i) wave[i] = std::tanh(out.v[i]);
  return wave;
}

// Same architecture expressed as graph nodes; mel_mt is an [M, T] node.
// Returns the rank-1 waveform node of length T * upsample_factor.
template <class S>
typename Graph<S>::NodeId generator_graph_forward(Graph<S>& gr, const Generator<S>& g,
                                                  typename Graph<S>::NodeId mel_mt) {
  const Pad pad = g.pad_mode();
  auto P = [&](const ParamPtr<S>& p) { return gr.param(p); };
  auto h = gr.conv1d(mel_mt, P(g.pre_w), P(g.pre_b), 1, 1, pad);
  for (size_t i = 0; i < g.stages.size(); ++i) {
    const auto& st = g.stages[i];
    h = gr.conv_transpose1d(h, P(st.up_w), P(st.up_b), g.cfg.stride_setup[i], pad);
    for (const auto& r : st.res) {
      auto t1 = gr.conv1d(gr.snake(h, P(r.a1)), P(r.c1w), P(r.c1b), 1, r.dilation, pad);
      auto t2 = gr.conv1d(gr.snake(t1, P(r.a2)), P(r.c2w), P(r.c2b), 1, 1, pad);
      h = gr.add(h, t2);
    }
  }
  auto out = gr.conv1d(gr.snake(h, P(g.post_alpha)), P(g.post_w), P(g.post_b), 1, 1, pad);
  auto wave = gr.tanh(out);
  return gr.reshape(wave, {gr.value(wave).numel()});
}

// Future input reach in waveform-rate samples: composes per-layer right
// context bottom-up. A layer with right context rc makes the earliest output
// sample affected by input i move to i - rc; a transposed conv multiplies the
// cumulative rate by its stride first. Residual branches take the max.
template <class S>
int64_t lookahead_samples(const Generator<S>& g) {
  if (g.cfg.causal) return 0;
  auto rc_conv = [](int kernel, int dilation) {
    const int64_t span = static_cast<int64_t>(kernel - 1) * dilation;
    return span - span / 2;  // right context of "same" padding
  };
  int64_t look = rc_conv(g.cfg.io_kernel, 1);  // pre conv at frame rate
  for (size_t i = 0; i < g.stages.size(); ++i) {
    const int stride = g.cfg.stride_setup[i];
    const int k = g.cfg.stage_kernel(i);
    look = look * stride + rc_conv(k, 1);
    for (const auto& dil : g.cfg.stage_dilations(i)) {
      // residual branch: two convs; identity branch adds nothing
      look += rc_conv(3, dil) + rc_conv(3, 1);
    }
  }
  look += rc_conv(g.cfg.io_kernel, 1);  // post conv at waveform rate
  return look;
}

template <class S>
double algorithmic_delay_ms(const Generator<S>& g, const FrontendConfig& fc) {
  const double base = static_cast<double>(fc.window_len);
  const double extra = static_cast<double>(lookahead_samples(g));
  return (base + extra) / static_cast<double>(fc.sample_rate_hz) * 1000.0;
}

}  // namespace lowvoc

#endif  // LOWVOC_GENERATOR_HPP
