#ifndef LOWVOC_SSL_HPP
#define LOWVOC_SSL_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "lowvoc/error.hpp"
#include "lowvoc/graph.hpp"
#include "lowvoc/kernels.hpp"
#include "lowvoc/tensor.hpp"

namespace lowvoc {

// Stub self-supervised speech encoder with a wav2vec2-style interface:
// a frozen stack of strided 1-D convolutions with GELU, total downsampling
// 320. Kernel sizes equal the strides, so the frame count is exactly
// floor(len / 320) for every input length. Weights are drawn once from a
// fixed seed; real feature-extractor weights can be dropped in through the
// weight store using the layer names below ("ssl.l<i>.w" / "ssl.l<i>.b",
// weight shape [out, in, k]).
struct SslConfig {
  int width = 64;  // representation dimension D
  static constexpr int kDownsample = 320;
  static const std::vector<int>& strides() {
    static const std::vector<int> s = {5, 2, 2, 2, 2, 2, 2};
    return s;
  }
};

template <class S>
struct SslRepresentation {
  Tensor<S> frames;  // [F, D]
  int downsample_factor = SslConfig::kDownsample;
};

template <class S>
struct SslEncoder {
  SslConfig cfg;
  ParamSet<S> params;
  std::vector<ParamPtr<S>> ws, bs;
};

template <class S>
SslEncoder<S> build_ssl_encoder(uint64_t seed, int width = 64) {
  require(width >= 1, ErrorCode::invalid_config, "ssl width must be >= 1");
  SslEncoder<S> enc;
  enc.cfg.width = width;
  Rng rng(seed);
  int ci = 1;
  const auto& strides = SslConfig::strides();
  for (size_t l = 0; l < strides.size(); ++l) {
    const int k = strides[l];
    auto w = enc.params.make("ssl.l" + std::to_string(l) + ".w", {width, ci, k}, false);
    // scaled up so activations keep useful dynamic range through 7 layers
    detail::init_normal(rng, w->value, 1.0 / std::sqrt(static_cast<double>(ci * k)));
    auto b = enc.params.make("ssl.l" + std::to_string(l) + ".b", {width}, false);
    enc.ws.push_back(w);
    enc.bs.push_back(b);
    ci = width;
  }
  return enc;
}

template <class S>
SslEncoder<S> ssl_encoder_from_params(int width, const ParamSet<S>& loaded) {
  SslEncoder<S> enc = build_ssl_encoder<S>(0, width);
  for (auto& p : enc.params.items) {
    auto src = loaded.find(p->name);
    require(src != nullptr, ErrorCode::integrity, "missing ssl parameter " + p->name);
    require(src->value.shape == p->value.shape, ErrorCode::integrity,
            "ssl parameter shape mismatch for " + p->name);
    p->value.v = src->value.v;
  }
  return enc;
}

// Plain forward; output [F, D] with F = floor(len / 320).
template <class S>
SslRepresentation<S> encode(const SslEncoder<S>& enc, const std::vector<S>& wave) {
  require(static_cast<int64_t>(wave.size()) >= SslConfig::kDownsample, ErrorCode::too_short,
          "wave shorter than one ssl frame");
  Tensor<S> h({1, static_cast<int64_t>(wave.size())}, wave);
  const auto& strides = SslConfig::strides();
  for (size_t l = 0; l < strides.size(); ++l) {
    const auto& w = enc.ws[l]->value;
    const int k = static_cast<int>(w.shape[2]);
    Tensor<S> out({w.shape[0], conv1d_out_len(h.shape[1], k, strides[l], 1, Pad::valid)});
    conv1d_fwd(h.data(), h.shape[0], h.shape[1], w.data(), w.shape[0], k, strides[l], 1,
               Pad::valid, enc.bs[l]->value.data(), out.data());
    for (auto& x : out.v) x = gelu_val(x);
    h = std::move(out);
  }
  SslRepresentation<S> rep;
  rep.frames = Tensor<S>({h.shape[1], h.shape[0]});
  for (int64_t c = 0; c < h.shape[0]; ++c)
    for (int64_t f = 0; f < h.shape[1]; ++f)
      rep.frames.v[static_cast<size_t>(f * h.shape[0] + c)] = h.v[static_cast<size_t>(c * h.shape[1] + f)];
  return rep;
}

// Graph forward; returns a [D, F] node (frames are columns). Parameters are
// frozen but gradients flow back to the wave node.
template <class S>
typename Graph<S>::NodeId ssl_graph_forward(Graph<S>& gr, const SslEncoder<S>& enc,
                                            typename Graph<S>::NodeId wave) {
  require(gr.value(wave).numel() >= SslConfig::kDownsample, ErrorCode::too_short,
          "wave shorter than one ssl frame");
  auto h = gr.reshape(wave, {1, gr.value(wave).numel()});
  const auto& strides = SslConfig::strides();
  for (size_t l = 0; l < strides.size(); ++l) {
    h = gr.conv1d(h, gr.param(enc.ws[l], false), gr.param(enc.bs[l], false), strides[l], 1,
                  Pad::valid);
    h = gr.gelu(h);
  }
  return h;
}

}  // namespace lowvoc

#endif  // LOWVOC_SSL_HPP
