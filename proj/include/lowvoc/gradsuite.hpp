#ifndef LOWVOC_GRADSUITE_HPP
#define LOWVOC_GRADSUITE_HPP

#include <string>
#include <vector>

#include "lowvoc/discriminator.hpp"
#include "lowvoc/generator.hpp"
#include "lowvoc/graph.hpp"
#include "lowvoc/losses.hpp"
#include "lowvoc/ssl.hpp"

namespace lowvoc {

// Central-difference verification of every differentiable op plus the full
// generator + Eq-(3) composite, at 64-bit precision. Inputs are kept away
// from the kinks of |.|, leaky-relu and clamp so the finite differences are
// meaningful.
struct GradSuiteResult {
  struct Entry {
    std::string name;
    double max_rel_err = 0;
    int64_t samples = 0;
  };
  std::vector<Entry> entries;

  double worst() const {
    double w = 0;
    for (const auto& e : entries) w = std::max(w, e.max_rel_err);
    return w;
  }
  bool pass(double tol = 1e-4) const { return worst() < tol; }
};

namespace gradsuite_detail {

using G = Graph<double>;

inline Tensor<double> rand_tensor(Rng& rng, std::vector<int64_t> shape, double lo, double hi) {
  Tensor<double> t(std::move(shape));
  for (auto& x : t.v) x = rng.uniform(lo, hi);
  return t;
}

// Runs fn for `shapes` rounds with fresh randomness, keeps the worst error.
template <class F>
void run_entry(GradSuiteResult& res, const std::string& name, uint64_t seed, int rounds, F fn) {
  GradSuiteResult::Entry e;
  e.name = name;
  for (int r = 0; r < rounds; ++r) {
    Rng rng(seed + static_cast<uint64_t>(r) * 7919 + 13);
    GradCheckReport rep = fn(rng);
    e.max_rel_err = std::max(e.max_rel_err, rep.max_rel_err);
    e.samples += rep.samples;
  }
  res.entries.push_back(e);
}

}  // namespace gradsuite_detail

inline GradSuiteResult run_grad_suite(uint64_t seed = 20240101, bool thorough = true) {
  using namespace gradsuite_detail;
  GradSuiteResult res;
  const int rounds = thorough ? 5 : 2;
  const double eps = 1e-5;

  // conv1d over pad modes, strides and dilations
  run_entry(res, "conv1d", seed, rounds * 3, [&](Rng& rng) {
    const Pad pads[3] = {Pad::causal, Pad::same, Pad::valid};
    const Pad pad = pads[rng.uniform_int(3)];
    const int cin = 1 + static_cast<int>(rng.uniform_int(3));
    const int cout = 1 + static_cast<int>(rng.uniform_int(3));
    const int k = 1 + static_cast<int>(rng.uniform_int(4));
    const int stride = 1 + static_cast<int>(rng.uniform_int(2));
    const int dil = 1 + static_cast<int>(rng.uniform_int(2));
    const int64_t len = 16 + static_cast<int64_t>(rng.uniform_int(16));
    G g;
    ParamSet<double> ps;
    auto w = ps.make("w", {cout, cin, k});
    detail::init_normal(rng, w->value, 0.5);
    auto b = ps.make("b", {cout});
    detail::init_normal(rng, b->value, 0.5);
    auto x = g.input(rand_tensor(rng, {cin, len}, -1.0, 1.0), true);
    auto y = g.conv1d(x, g.param(w), g.param(b), stride, dil, pad);
    auto loss = g.mean(g.mul(y, y));
    return g.grad_check(loss, {x, 1, 2}, eps, 40, rng);
  });

  run_entry(res, "conv_transpose1d", seed + 1, rounds * 2, [&](Rng& rng) {
    const Pad pad = rng.uniform_int(2) == 0 ? Pad::causal : Pad::same;
    const int cin = 1 + static_cast<int>(rng.uniform_int(3));
    const int cout = 1 + static_cast<int>(rng.uniform_int(3));
    const int stride = 1 + static_cast<int>(rng.uniform_int(3));
    const int k = stride + static_cast<int>(rng.uniform_int(4));
    const int64_t len = 8 + static_cast<int64_t>(rng.uniform_int(8));
    G g;
    ParamSet<double> ps;
    auto w = ps.make("w", {cout, cin, k});
    detail::init_normal(rng, w->value, 0.5);
    auto b = ps.make("b", {cout});
    auto x = g.input(rand_tensor(rng, {cin, len}, -1.0, 1.0), true);
    auto y = g.conv_transpose1d(x, g.param(w), g.param(b), stride, pad);
    auto loss = g.mean(g.mul(y, y));
    return g.grad_check(loss, {x, 1, 2}, eps, 40, rng);
  });

  run_entry(res, "conv2d", seed + 2, rounds, [&](Rng& rng) {
    const int cin = 1 + static_cast<int>(rng.uniform_int(2));
    const int cout = 1 + static_cast<int>(rng.uniform_int(3));
    const int kh = 1 + static_cast<int>(rng.uniform_int(3));
    const int kw = 1 + static_cast<int>(rng.uniform_int(3));
    G g;
    ParamSet<double> ps;
    auto w = ps.make("w", {cout, cin, kh, kw});
    detail::init_normal(rng, w->value, 0.5);
    auto b = ps.make("b", {cout});
    auto x = g.input(rand_tensor(rng, {cin, 9, 7}, -1.0, 1.0), true);
    auto y = g.conv2d(x, g.param(w), g.param(b), 2, 1, 1, 1);
    auto loss = g.mean(g.mul(y, y));
    return g.grad_check(loss, {x, 1, 2}, eps, 40, rng);
  });

  run_entry(res, "snake", seed + 3, rounds, [&](Rng& rng) {
    const int ch = 1 + static_cast<int>(rng.uniform_int(4));
    G g;
    ParamSet<double> ps;
    auto alpha = ps.make("alpha", {ch});
    for (auto& a : alpha->value.v) a = rng.uniform(0.5, 2.0);
    auto x = g.input(rand_tensor(rng, {ch, 12}, -2.0, 2.0), true);
    auto y = g.snake(x, g.param(alpha));
    auto loss = g.mean(g.mul(y, y));
    return g.grad_check(loss, {x, 1}, eps, 30, rng);
  });

  run_entry(res, "elementwise", seed + 4, rounds, [&](Rng& rng) {
    G g;
    auto a = g.input(rand_tensor(rng, {3, 8}, 0.2, 2.0), true);
    auto b = g.input(rand_tensor(rng, {3, 8}, -2.0, -0.2), true);
    // tanh(a) * b + gelu(a), leaky on b, scaled / shifted
    auto y = g.add(g.mul(g.tanh(a), b), g.gelu(a));
    y = g.add(g.leaky_relu(b, 0.17), y);
    y = g.add_scalar(g.scale(y, 0.7), 0.3);
    auto loss = g.mean(g.mul(y, y));
    return g.grad_check(loss, {a, b}, eps, 40, rng);
  });

  run_entry(res, "reductions", seed + 5, rounds, [&](Rng& rng) {
    G g;
    // offset keeps |a-b| away from zero for the l1 kink
    auto a = g.input(rand_tensor(rng, {4, 6}, 1.0, 2.0), true);
    auto b = g.input(rand_tensor(rng, {4, 6}, -2.0, -1.0), true);
    auto y = g.add(g.l1_mean(a, b), g.mse_mean(a, b));
    y = g.add(y, g.dot(a, b));
    y = g.add(y, g.l2_norm(a));
    y = g.add(y, g.mean(b));
    return g.grad_check(y, {a, b}, eps, 40, rng);
  });

  run_entry(res, "matmul_log_clamp", seed + 6, rounds, [&](Rng& rng) {
    G g;
    auto a = g.input(rand_tensor(rng, {4, 5}, 0.5, 2.0), true);
    auto b = g.input(rand_tensor(rng, {5, 3}, 0.5, 2.0), true);
    // products stay well above the clamp floor, away from that kink
    auto y = g.log(g.clamp_min(g.matmul(a, b), 1e-3));
    auto loss = g.mean(y);
    return g.grad_check(loss, {a, b}, eps, 40, rng);
  });

  run_entry(res, "pad_reshape", seed + 7, rounds, [&](Rng& rng) {
    G g;
    auto a = g.input(rand_tensor(rng, {12}, -1.0, 1.0), true);
    auto y = g.reshape(g.pad_last(a, 4), {4, 4});
    auto loss = g.mse_mean(y, g.constant(rand_tensor(rng, {4, 4}, -1.0, 1.0)));
    return g.grad_check(loss, {a}, eps, 12, rng);
  });

  run_entry(res, "stft_power", seed + 8, rounds, [&](Rng& rng) {
    G g;
    auto x = g.input(rand_tensor(rng, {40}, -1.0, 1.0), true);
    auto y = g.stft_power(x, 16, 8, 16);
    auto loss = g.mean(y);
    return g.grad_check(loss, {x}, eps, 40, rng);
  });

  run_entry(res, "stft_mag", seed + 9, rounds, [&](Rng& rng) {
    G g;
    auto x = g.input(rand_tensor(rng, {40}, 0.3, 1.0), true);
    auto y = g.stft_mag(x, 16, 8, 16);
    auto loss = g.mean(y);
    return g.grad_check(loss, {x}, eps, 40, rng);
  });

  run_entry(res, "cosine_loss", seed + 10, rounds * 2, [&](Rng& rng) {
    const bool frame_wise = rng.uniform_int(2) == 0;
    G g;
    auto a = g.input(rand_tensor(rng, {5, 4}, 0.2, 1.0), true);
    auto b = g.input(rand_tensor(rng, {5, 4}, 0.2, 1.0), true);
    auto loss = g.cosine_loss(a, b, frame_wise);
    return g.grad_check(loss, {a, b}, eps, 40, rng);
  });

  // Full composite: tiny causal generator -> student bank + teacher bank +
  // ssl encoder + mel mirror, combined by Eq (3).
  run_entry(res, "generator_eq3_composite", seed + 11, 1, [&](Rng& rng) {
    FrontendConfig fc;
    fc.sample_rate_hz = 16000;
    fc.window_len = 16;
    fc.frame_shift = 4;
    fc.dft_size = 16;
    fc.mel_bands = 8;
    GeneratorConfig gc;
    gc.stride_setup = {2, 2};
    gc.causal = true;
    gc.base_channels = 6;
    gc.mel_bands = 8;
    gc.frame_shift = 4;
    gc.io_kernel = 3;
    gc.resblock_dilations = {{1}};
    DiscriminatorBankConfig dc;
    dc.periods = {2, 3};
    dc.resolutions = {{16, 4, 16}};
    dc.mpd_channels = {4, 8};
    dc.mrd_channels = {4};

    Generator<double> gen = build_generator<double>(gc, 11);
    // Re-draw the weights at a healthy scale: with the cold-start sigma the
    // generator output is near silence, which parks the mel mirror on its
    // clamp floor and shrinks SSL norms until finite differences lose
    // conditioning. The check needs a generic, well-scaled operating point.
    for (auto& p : gen.params.items) {
      if (p->name.find(".alpha") != std::string::npos || p->name.find(".a1") != std::string::npos ||
          p->name.find(".a2") != std::string::npos) {
        for (auto& v : p->value.v) v = rng.uniform(0.5, 2.0);
      } else {
        for (auto& v : p->value.v) v = rng.normal(0.0, 0.3);
      }
    }
    DiscriminatorBank<double> bank = build_discriminator_bank<double>(dc, 12, "sd");
    DiscriminatorBank<double> tbank = build_discriminator_bank<double>(dc, 13, "td");
    SslEncoder<double> enc = build_ssl_encoder<double>(14, 8);

    const int64_t t_count = 96;  // 384 output samples >= one ssl frame
    const int64_t l_out = t_count * gc.upsample_factor();
    Tensor<double> mel = rand_tensor(rng, {gc.mel_bands, t_count}, -2.0, 2.0);
    std::vector<double> real(static_cast<size_t>(l_out));
    for (auto& v : real) v = rng.uniform(-0.5, 0.5);

    G g;
    auto mel_in = g.input(mel);
    auto s_hat = generator_graph_forward(g, gen, mel_in);
    auto real_in = g.input(Tensor<double>({l_out}, real));
    auto fake_nodes = bank_graph_forward(g, bank, s_hat, false);
    auto real_nodes = bank_graph_forward(g, bank, real_in, false);
    auto j_adv = adv_generator_loss(g, fake_nodes.scores);
    auto j_fm_s = feature_matching_loss(g, real_nodes.features, fake_nodes.features);
    auto mel_hat = wav2mel_graph(g, s_hat, fc);
    auto mel_ref_t = wav2mel(real, fc);
    auto j_mel = g.l1_mean(g.constant(mel_ref_t), mel_hat);
    auto t_fake = bank_graph_forward(g, tbank, s_hat, false);
    DiscriminatorFeatures<double> t_ref = bank_forward(tbank, real);
    auto j_fm_t = feature_matching_loss_const_ref(g, t_ref, t_fake.features);
    auto e_hat = ssl_graph_forward(g, enc, s_hat);
    SslRepresentation<double> e_ref = encode(enc, real);
    Tensor<double> e_ref_df({e_ref.frames.shape[1], e_ref.frames.shape[0]});
    for (int64_t f = 0; f < e_ref.frames.shape[0]; ++f)
      for (int64_t d = 0; d < e_ref.frames.shape[1]; ++d)
        e_ref_df.v[static_cast<size_t>(d * e_ref.frames.shape[0] + f)] =
            e_ref.frames.v[static_cast<size_t>(f * e_ref.frames.shape[1] + d)];
    auto j_ssl = ssl_loss_node(g, g.constant(e_ref_df), e_hat, SslVariant::cosine, true);
    LossWeights w;
    auto loss = total_generator_loss_node(g, j_adv, j_mel, j_fm_s, j_fm_t, j_ssl, w);

    // the generator parameters are the only trainable leaves in this graph
    return g.grad_check(loss, g.trainable_param_nodes(), eps, 220, rng);
  });

  return res;
}

}  // namespace lowvoc

#endif  // LOWVOC_GRADSUITE_HPP
