#ifndef LOWVOC_DISCRIMINATOR_HPP
#define LOWVOC_DISCRIMINATOR_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "lowvoc/error.hpp"
#include "lowvoc/graph.hpp"
#include "lowvoc/rng.hpp"
#include "lowvoc/tensor.hpp"

namespace lowvoc {

// Multi-period + multi-resolution discriminator bank. Periods fold the wave
// into a (len/p) x p grid; resolutions feed magnitude spectrograms. Both run
// small strided 2-D conv stacks with leaky ReLU. Hidden features are the
// post-activation output of every conv layer plus the final score map, in a
// fixed (discriminator, layer) order shared by every forward.
struct MrdResolution {
  int dft_size = 512;
  int shift = 128;
  int window = 512;
};

struct DiscriminatorBankConfig {
  std::vector<int> periods = {2, 3, 5, 7, 11};
  std::vector<MrdResolution> resolutions = {{512, 128, 512}, {1024, 256, 1024}, {256, 64, 256}};
  std::vector<int> mpd_channels = {16, 32, 64};
  std::vector<int> mrd_channels = {16, 32, 32};
  double leaky_slope = 0.1;
};

inline void validate(const DiscriminatorBankConfig& c) {
  require(!c.periods.empty() || !c.resolutions.empty(), ErrorCode::invalid_config,
          "discriminator bank is empty");
  for (size_t i = 0; i < c.periods.size(); ++i) {
    require(c.periods[i] >= 1, ErrorCode::invalid_config, "periods must be >= 1");
    for (size_t j = i + 1; j < c.periods.size(); ++j)
      require(c.periods[i] != c.periods[j], ErrorCode::invalid_config, "periods must be distinct");
  }
  for (size_t i = 0; i < c.resolutions.size(); ++i) {
    const auto& r = c.resolutions[i];
    require(is_pow2(r.dft_size) && r.window <= r.dft_size && r.shift >= 1,
            ErrorCode::invalid_config, "bad MRD resolution");
    for (size_t j = i + 1; j < c.resolutions.size(); ++j)
      require(!(r.dft_size == c.resolutions[j].dft_size && r.shift == c.resolutions[j].shift &&
                r.window == c.resolutions[j].window),
              ErrorCode::invalid_config, "resolutions must be distinct");
  }
  require(!c.mpd_channels.empty() && !c.mrd_channels.empty(), ErrorCode::invalid_config,
          "channel plans must be nonempty");
}

template <class S>
struct DiscriminatorBank {
  DiscriminatorBankConfig cfg;
  std::string prefix;  // parameter name prefix, e.g. "sd" / "td"
  ParamSet<S> params;

  struct Sub {  // one discriminator's conv stack
    std::vector<ParamPtr<S>> ws, bs;  // last entry is the score conv
  };
  std::vector<Sub> mpd;  // aligned with cfg.periods
  std::vector<Sub> mrd;  // aligned with cfg.resolutions

  int discriminator_count() const {
    return static_cast<int>(cfg.periods.size() + cfg.resolutions.size());
  }
};

template <class S>
DiscriminatorBank<S> build_discriminator_bank(const DiscriminatorBankConfig& cfg,
                                              uint64_t seed, const std::string& prefix) {
  validate(cfg);
  DiscriminatorBank<S> bank;
  bank.cfg = cfg;
  bank.prefix = prefix;
  Rng rng(seed);
  auto weight = [&](const std::string& name, std::vector<int64_t> shape) {
    auto p = bank.params.make(name, std::move(shape));
    detail::init_normal(rng, p->value, 0.01);
    return p;
  };
  for (size_t pi = 0; pi < cfg.periods.size(); ++pi) {
    typename DiscriminatorBank<S>::Sub sub;
    int ci = 1;
    const std::string base = prefix + ".mpd" + std::to_string(pi);
    for (size_t l = 0; l < cfg.mpd_channels.size(); ++l) {
      const int co = cfg.mpd_channels[l];
      sub.ws.push_back(weight(base + ".c" + std::to_string(l) + ".w", {co, ci, 5, 1}));
      sub.bs.push_back(bank.params.make(base + ".c" + std::to_string(l) + ".b", {co}));
      ci = co;
    }
    sub.ws.push_back(weight(base + ".score.w", {1, ci, 3, 1}));
    sub.bs.push_back(bank.params.make(base + ".score.b", {1}));
    bank.mpd.push_back(std::move(sub));
  }
  for (size_t ri = 0; ri < cfg.resolutions.size(); ++ri) {
    typename DiscriminatorBank<S>::Sub sub;
    int ci = 1;
    const std::string base = prefix + ".mrd" + std::to_string(ri);
    for (size_t l = 0; l < cfg.mrd_channels.size(); ++l) {
      const int co = cfg.mrd_channels[l];
      sub.ws.push_back(weight(base + ".c" + std::to_string(l) + ".w", {co, ci, 3, 3}));
      sub.bs.push_back(bank.params.make(base + ".c" + std::to_string(l) + ".b", {co}));
      ci = co;
    }
    sub.ws.push_back(weight(base + ".score.w", {1, ci, 3, 3}));
    sub.bs.push_back(bank.params.make(base + ".score.b", {1}));
    bank.mrd.push_back(std::move(sub));
  }
  return bank;
}

template <class S>
DiscriminatorBank<S> bank_from_params(const DiscriminatorBankConfig& cfg,
                                      const ParamSet<S>& loaded, const std::string& prefix) {
  DiscriminatorBank<S> bank = build_discriminator_bank<S>(cfg, 0, prefix);
  for (auto& p : bank.params.items) {
    auto src = loaded.find(p->name);
    require(src != nullptr, ErrorCode::integrity, "missing bank parameter " + p->name);
    require(src->value.shape == p->value.shape, ErrorCode::integrity,
            "bank parameter shape mismatch for " + p->name);
    p->value.v = src->value.v;
  }
  return bank;
}

// Graph-side result: one score node and the ordered feature nodes per
// discriminator (MPDs first, then MRDs).
template <class S>
struct BankNodes {
  std::vector<typename Graph<S>::NodeId> scores;
  std::vector<std::vector<typename Graph<S>::NodeId>> features;
};

template <class S>
BankNodes<S> bank_graph_forward(Graph<S>& gr, const DiscriminatorBank<S>& bank,
                                typename Graph<S>::NodeId wave, bool trainable) {
  const int64_t len = gr.value(wave).numel();
  const S slope = static_cast<S>(bank.cfg.leaky_slope);
  BankNodes<S> out;

  auto run_stack = [&](const typename DiscriminatorBank<S>::Sub& sub,
                       typename Graph<S>::NodeId x, int sh, int sw, int ph, int pw,
                       int score_ph, int score_pw) {
    std::vector<typename Graph<S>::NodeId> feats;
    for (size_t l = 0; l + 1 < sub.ws.size(); ++l) {
      x = gr.conv2d(x, gr.param(sub.ws[l], trainable), gr.param(sub.bs[l], trainable),
                    sh, sw, ph, pw);
      x = gr.leaky_relu(x, slope);
      feats.push_back(x);
    }
    x = gr.conv2d(x, gr.param(sub.ws.back(), trainable), gr.param(sub.bs.back(), trainable),
                  1, 1, score_ph, score_pw);
    feats.push_back(x);  // final score map counts as a feature too
    out.scores.push_back(x);
    out.features.push_back(std::move(feats));
  };

  for (size_t pi = 0; pi < bank.cfg.periods.size(); ++pi) {
    const int p = bank.cfg.periods[pi];
    require(len >= p, ErrorCode::too_short, "wave shorter than MPD period");
    const int64_t rows = (len + p - 1) / p;
    auto padded = gr.pad_last(wave, rows * p - len);
    auto grid = gr.reshape(padded, {1, rows, p});
    run_stack(bank.mpd[pi], grid, 3, 1, 2, 0, 1, 0);
  }
  for (size_t ri = 0; ri < bank.cfg.resolutions.size(); ++ri) {
    const auto& r = bank.cfg.resolutions[ri];
    require(len >= r.window, ErrorCode::too_short, "wave shorter than MRD window");
    auto spec = gr.stft_mag(wave, r.window, r.shift, r.dft_size);
    auto img = gr.reshape(spec, {1, gr.value(spec).shape[0], gr.value(spec).shape[1]});
    run_stack(bank.mrd[ri], img, 2, 2, 1, 1, 1, 1);
  }
  return out;
}

// Plain feature extraction: builds a throwaway graph so the numbers are the
// ones training sees.
template <class S>
struct DiscriminatorFeatures {
  std::vector<Tensor<S>> scores;                 // per discriminator
  std::vector<std::vector<Tensor<S>>> features;  // per discriminator, per layer
};

template <class S>
DiscriminatorFeatures<S> bank_forward(const DiscriminatorBank<S>& bank,
                                      const std::vector<S>& wave) {
  Graph<S> gr;
  auto w = gr.input(Tensor<S>({static_cast<int64_t>(wave.size())}, wave));
  BankNodes<S> nodes = bank_graph_forward(gr, bank, w, false);
  gr.forward();
  DiscriminatorFeatures<S> out;
  for (size_t i = 0; i < nodes.scores.size(); ++i) {
    out.scores.push_back(gr.value(nodes.scores[i]));
    std::vector<Tensor<S>> fl;
    for (auto id : nodes.features[i]) fl.push_back(gr.value(id));
    out.features.push_back(std::move(fl));
  }
  return out;
}

}  // namespace lowvoc

#endif  // LOWVOC_DISCRIMINATOR_HPP
