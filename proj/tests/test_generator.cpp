#include <cmath>
#include <vector>

#include "doctest.h"
#include "lowvoc/generator.hpp"

using namespace lowvoc;

namespace {

GeneratorConfig toy_cfg(std::vector<int> strides, bool causal, int frame_shift) {
  GeneratorConfig c;
  c.stride_setup = std::move(strides);
  c.causal = causal;
  c.base_channels = 8;
  c.mel_bands = 16;
  c.frame_shift = frame_shift;
  return c;
}

template <class S>
Tensor<S> random_mel(Rng& rng, int64_t t, int64_t m) {
  Tensor<S> mel({t, m});
  for (auto& v : mel.v) v = static_cast<S>(rng.normal(0.0, 1.0));
  return mel;
}

// Brute-force lookahead: perturb one future mel frame, find the earliest
// changed output sample, maximize t*prod - n_min over probe frames. The
// perturbation is large so the influence through outermost kernel taps stays
// above the output's floating-point resolution.
template <class S>
int64_t lookahead_by_perturbation(const Generator<S>& g, Rng& rng, int64_t t_count) {
  const Tensor<S> mel = random_mel<S>(rng, t_count, g.cfg.mel_bands);
  const std::vector<S> base = generator_forward(g, mel);
  const int64_t prod = g.cfg.upsample_factor();
  int64_t worst = 0;
  for (int64_t t = t_count / 2; t < t_count; ++t) {
    Tensor<S> pert = mel;
    for (int64_t b = 0; b < g.cfg.mel_bands; ++b)
      pert.v[static_cast<size_t>(t * g.cfg.mel_bands + b)] += S(1e6);
    const std::vector<S> out = generator_forward(g, pert);
    int64_t first_change = -1;
    for (size_t i = 0; i < out.size(); ++i)
      if (out[i] != base[i]) {
        first_change = static_cast<int64_t>(i);
        break;
      }
    if (first_change >= 0) worst = std::max(worst, t * prod - first_change);
  }
  return worst;
}

}  // namespace

TEST_CASE("build_generator: stride/frame-shift pairing and determinism") {
  SUBCASE("(8,4,2,2) with Ns=128 is valid") {
    auto g = build_generator<double>(toy_cfg({8, 4, 2, 2}, true, 128), 3);
    CHECK(g.cfg.upsample_factor() == 128);
  }
  SUBCASE("(8,8,2,2) with Ns=128 is rejected, accepted with Ns=256") {
    CHECK_THROWS_AS(build_generator<double>(toy_cfg({8, 8, 2, 2}, true, 128), 3), Error);
    auto g = build_generator<double>(toy_cfg({8, 8, 2, 2}, true, 256), 3);
    CHECK(g.cfg.upsample_factor() == 256);
  }
  SUBCASE("same seed gives bit-identical parameters") {
    auto a = build_generator<double>(toy_cfg({4, 2, 2, 2, 2, 2}, true, 128), 9);
    auto b = build_generator<double>(toy_cfg({4, 2, 2, 2, 2, 2}, true, 128), 9);
    CHECK(params_checksum(a.params) == params_checksum(b.params));
    auto c = build_generator<double>(toy_cfg({4, 2, 2, 2, 2, 2}, true, 128), 10);
    CHECK(params_checksum(a.params) != params_checksum(c.params));
  }
}

TEST_CASE("forward: length contract, boundedness, band mismatch") {
  Rng rng(5);
  auto g = build_generator<float>(toy_cfg({8, 4, 2, 2}, true, 128), 21);
  const auto mel = random_mel<float>(rng, 5, 16);
  const auto wave = generator_forward(g, mel);
  CHECK(wave.size() == 5 * 128);
  for (float s : wave) {
    CHECK(std::isfinite(s));
    CHECK(std::abs(s) <= 1.0f);
  }
  Tensor<float> bad({5, 17});
  CHECK_THROWS_AS(generator_forward(g, bad), Error);
}

TEST_CASE("forward: zeroed output conv gives exact silence") {
  Rng rng(6);
  auto g = build_generator<double>(toy_cfg({8, 4, 2, 2}, true, 128), 2);
  g.post_w->value.fill(0.0);
  g.post_b->value.fill(0.0);
  const auto wave = generator_forward(g, random_mel<double>(rng, 3, 16));
  for (double s : wave) CHECK(s == 0.0);
}

TEST_CASE("causality: perturbing frame t leaves samples before t*prod bit-identical") {
  Rng rng(7);
  auto g = build_generator<float>(toy_cfg({8, 4, 2, 2}, true, 128), 33);
  const auto mel = random_mel<float>(rng, 8, 16);
  const auto base = generator_forward(g, mel);
  Tensor<float> pert = mel;
  for (int64_t b = 0; b < 16; ++b) pert.v[static_cast<size_t>(3 * 16 + b)] += 1.0f;
  const auto out = generator_forward(g, pert);
  for (int64_t i = 0; i < 3 * 128; ++i) CHECK(out[static_cast<size_t>(i)] == base[static_cast<size_t>(i)]);
  // and something after the boundary actually changed
  bool changed = false;
  for (size_t i = 3 * 128; i < out.size(); ++i) changed = changed || out[i] != base[i];
  CHECK(changed);
}

TEST_CASE("mode contrast: non-causal generator violates causality") {
  Rng rng(8);
  auto g = build_generator<float>(toy_cfg({8, 4, 2, 2}, false, 128), 33);
  const auto mel = random_mel<float>(rng, 8, 16);
  const auto base = generator_forward(g, mel);
  Tensor<float> pert = mel;
  for (int64_t b = 0; b < 16; ++b) pert.v[static_cast<size_t>(5 * 16 + b)] += 1.0f;
  const auto out = generator_forward(g, pert);
  bool early_change = false;
  for (int64_t i = 0; i < 5 * 128; ++i) early_change = early_change || out[static_cast<size_t>(i)] != base[static_cast<size_t>(i)];
  CHECK(early_change);
}

TEST_CASE("lookahead: causal zero, single-conv right context, perturbation oracle") {
  SUBCASE("causal is always zero") {
    auto g = build_generator<double>(toy_cfg({8, 4, 2, 2}, true, 128), 1);
    CHECK(lookahead_samples(g) == 0);
  }
  SUBCASE("non-causal toy configs match the perturbation probe") {
    for (uint64_t seed = 0; seed < 3; ++seed) {
      GeneratorConfig cfg = toy_cfg({4, 2}, false, 8);
      cfg.mel_bands = 6;
      cfg.base_channels = 4;
      auto g = build_generator<double>(cfg, seed + 100);
      Rng rng(seed + 55);
      const int64_t analytic = lookahead_samples(g);
      const int64_t probed = lookahead_by_perturbation(g, rng, 40);
      CHECK(analytic == probed);
    }
  }
}

TEST_CASE("algorithmic delay: paper rows and non-causal lookahead inclusion") {
  FrontendConfig fc;  // Nw = 512 @ 16 kHz
  SUBCASE("causal (8,4,2,2), Nw=512 -> 32 ms") {
    auto g = build_generator<double>(toy_cfg({8, 4, 2, 2}, true, 128), 1);
    CHECK(algorithmic_delay_ms(g, fc) == 32.0);
  }
  SUBCASE("causal (8,8,2,2), Nw=1024 -> 64 ms") {
    FrontendConfig fc2;
    fc2.window_len = 1024;
    fc2.frame_shift = 256;
    fc2.dft_size = 1024;
    auto g = build_generator<double>(toy_cfg({8, 8, 2, 2}, true, 256), 1);
    CHECK(algorithmic_delay_ms(g, fc2) == 64.0);
  }
  SUBCASE("non-causal adds the probed lookahead") {
    GeneratorConfig cfg = toy_cfg({4, 2}, false, 8);
    cfg.mel_bands = 6;
    cfg.base_channels = 4;
    FrontendConfig fc3;
    fc3.window_len = 64;
    fc3.frame_shift = 8;
    fc3.dft_size = 64;
    auto g = build_generator<double>(cfg, 123);
    Rng rng(9);
    const int64_t probed = lookahead_by_perturbation(g, rng, 40);
    CHECK(algorithmic_delay_ms(g, fc3) ==
          doctest::Approx((64.0 + static_cast<double>(probed)) / 16000.0 * 1000.0).epsilon(1e-12));
  }
}
