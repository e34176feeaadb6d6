#ifndef LOWVOC_LOSSES_HPP
#define LOWVOC_LOSSES_HPP

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "lowvoc/discriminator.hpp"
#include "lowvoc/error.hpp"
#include "lowvoc/frontend.hpp"
#include "lowvoc/graph.hpp"
#include "lowvoc/ssl.hpp"
#include "lowvoc/tensor.hpp"

namespace lowvoc {

struct LossWeights {
  double lambda_mel = 45.0;
  double lambda_fm = 2.0;
  double lambda_ssl = 4.0;
};

inline void validate(const LossWeights& w) {
  require(w.lambda_mel >= 0 && w.lambda_fm >= 0 && w.lambda_ssl >= 0,
          ErrorCode::invalid_config, "loss weights must be nonnegative");
}

enum class SslVariant { cosine, mse, mae };

struct LossReport {
  int64_t step = 0;
  double j_adv = 0, j_mel = 0, j_fm_s = 0, j_fm_t = 0, j_ssl = 0, j_gen = 0;
  double j_disc = 0;
  double lr = 0;
};

// Weighted sum of Eq-style parts, fixed left-to-right order:
// j_adv + lm*j_mel + lf*j_fm_s + lf*j_fm_t + ls*j_ssl.
inline double total_generator_loss(double j_adv, double j_mel, double j_fm_s, double j_fm_t,
                                   double j_ssl, const LossWeights& w) {
  for (double x : {j_adv, j_mel, j_fm_s, j_fm_t, j_ssl})
    require(std::isfinite(x), ErrorCode::contract, "loss part is not finite");
  return j_adv + w.lambda_mel * j_mel + w.lambda_fm * j_fm_s + w.lambda_fm * j_fm_t +
         w.lambda_ssl * j_ssl;
}

// --------- plain (tensor) versions ---------

// Mean absolute difference over all entries; shapes must match.
template <class S>
double mel_l1(const Tensor<S>& a, const Tensor<S>& b) {
  require(a.shape == b.shape, ErrorCode::shape_mismatch, "mel_l1 shape mismatch");
  double acc = 0;
  for (size_t i = 0; i < a.v.size(); ++i)
    acc += std::abs(static_cast<double>(a.v[i]) - static_cast<double>(b.v[i]));
  return acc / static_cast<double>(a.numel());
}

// Eq-(1)-style feature matching over plain features:
// (1/(I*L)) sum_i sum_l mean|f_a - f_b|.
template <class S>
double feature_matching(const DiscriminatorFeatures<S>& a, const DiscriminatorFeatures<S>& b) {
  require(a.features.size() == b.features.size(), ErrorCode::contract,
          "feature matching: discriminator count mismatch");
  double acc = 0;
  int64_t pairs = 0;
  for (size_t i = 0; i < a.features.size(); ++i) {
    require(a.features[i].size() == b.features[i].size(), ErrorCode::contract,
            "feature matching: layer count mismatch");
    for (size_t l = 0; l < a.features[i].size(); ++l) {
      const Tensor<S>& fa = a.features[i][l];
      const Tensor<S>& fb = b.features[i][l];
      require(fa.shape == fb.shape, ErrorCode::shape_mismatch,
              "feature matching: feature shape mismatch");
      double d = 0;
      for (size_t k = 0; k < fa.v.size(); ++k)
        d += std::abs(static_cast<double>(fa.v[k]) - static_cast<double>(fb.v[k]));
      acc += d / static_cast<double>(fa.numel());
      ++pairs;
    }
  }
  require(pairs > 0, ErrorCode::contract, "feature matching: empty feature lists");
  return acc / static_cast<double>(pairs);
}

// SSL similarity over [F, D] representations. Cosine is per frame (row),
// averaged; mse/mae are over all entries.
template <class S>
double ssl_loss(const SslRepresentation<S>& ref, const SslRepresentation<S>& hat,
                SslVariant variant) {
  const Tensor<S>& a = ref.frames;
  const Tensor<S>& b = hat.frames;
  require(a.shape == b.shape, ErrorCode::shape_mismatch, "ssl_loss shape mismatch");
  if (variant == SslVariant::mse || variant == SslVariant::mae) {
    double acc = 0;
    for (size_t i = 0; i < a.v.size(); ++i) {
      const double d = static_cast<double>(a.v[i]) - static_cast<double>(b.v[i]);
      acc += variant == SslVariant::mse ? d * d : std::abs(d);
    }
    return acc / static_cast<double>(a.numel());
  }
  const int64_t frames = a.shape[0], dim = a.shape[1];
  double acc = 0;
  for (int64_t f = 0; f < frames; ++f) {
    double d = 0, na = 0, nb = 0;
    for (int64_t c = 0; c < dim; ++c) {
      const double av = a.v[static_cast<size_t>(f * dim + c)];
      const double bv = b.v[static_cast<size_t>(f * dim + c)];
      d += av * bv;
      na += av * av;
      nb += bv * bv;
    }
    require(na > 0 && nb > 0, ErrorCode::degenerate_input, "ssl cosine: zero-norm frame");
    acc += 1.0 - d / (std::sqrt(na) * std::sqrt(nb));
  }
  return acc / static_cast<double>(frames);
}

// --------- graph builders ---------

// LSGAN generator side: mean over discriminators of mean((score - 1)^2).
template <class S>
typename Graph<S>::NodeId adv_generator_loss(Graph<S>& gr,
                                             const std::vector<typename Graph<S>::NodeId>& fake_scores) {
  require(!fake_scores.empty(), ErrorCode::contract, "adversarial loss: empty bank");
  typename Graph<S>::NodeId total = -1;
  for (auto sc : fake_scores) {
    Tensor<S> ones(gr.value(sc).shape);
    ones.fill(S(1));
    auto term = gr.mse_mean(sc, gr.constant(std::move(ones)));
    total = total < 0 ? term : gr.add(total, term);
  }
  return gr.scale(total, S(1) / static_cast<S>(fake_scores.size()));
}

// LSGAN discriminator side: mean over i of [mean((real-1)^2) + mean(fake^2)].
template <class S>
typename Graph<S>::NodeId adv_discriminator_loss(
    Graph<S>& gr, const std::vector<typename Graph<S>::NodeId>& real_scores,
    const std::vector<typename Graph<S>::NodeId>& fake_scores) {
  require(!real_scores.empty() && real_scores.size() == fake_scores.size(),
          ErrorCode::contract, "adversarial loss: empty or mismatched bank");
  typename Graph<S>::NodeId total = -1;
  for (size_t i = 0; i < real_scores.size(); ++i) {
    Tensor<S> ones(gr.value(real_scores[i]).shape);
    ones.fill(S(1));
    Tensor<S> zeros(gr.value(fake_scores[i]).shape);
    auto real_term = gr.mse_mean(real_scores[i], gr.constant(std::move(ones)));
    auto fake_term = gr.mse_mean(fake_scores[i], gr.constant(std::move(zeros)));
    auto term = gr.add(real_term, fake_term);
    total = total < 0 ? term : gr.add(total, term);
  }
  return gr.scale(total, S(1) / static_cast<S>(real_scores.size()));
}

// Feature matching between two per-discriminator feature node lists.
template <class S>
typename Graph<S>::NodeId feature_matching_loss(
    Graph<S>& gr, const std::vector<std::vector<typename Graph<S>::NodeId>>& fa,
    const std::vector<std::vector<typename Graph<S>::NodeId>>& fb) {
  require(fa.size() == fb.size() && !fa.empty(), ErrorCode::contract,
          "feature matching: discriminator count mismatch");
  typename Graph<S>::NodeId total = -1;
  int64_t pairs = 0;
  for (size_t i = 0; i < fa.size(); ++i) {
    require(fa[i].size() == fb[i].size(), ErrorCode::contract,
            "feature matching: layer count mismatch");
    for (size_t l = 0; l < fa[i].size(); ++l) {
      auto term = gr.l1_mean(fa[i][l], fb[i][l]);
      total = total < 0 ? term : gr.add(total, term);
      ++pairs;
    }
  }
  return gr.scale(total, S(1) / static_cast<S>(pairs));
}

// Variant of feature matching where the reference side is a list of constant
// tensors (e.g. teacher features of a frozen target).
template <class S>
typename Graph<S>::NodeId feature_matching_loss_const_ref(
    Graph<S>& gr, const DiscriminatorFeatures<S>& ref,
    const std::vector<std::vector<typename Graph<S>::NodeId>>& fb,
    std::vector<std::vector<typename Graph<S>::NodeId>>* ref_nodes_out = nullptr) {
  std::vector<std::vector<typename Graph<S>::NodeId>> fa;
  for (const auto& disc : ref.features) {
    std::vector<typename Graph<S>::NodeId> row;
    for (const auto& t : disc) row.push_back(gr.constant(t));
    fa.push_back(std::move(row));
  }
  if (ref_nodes_out) *ref_nodes_out = fa;
  return feature_matching_loss(gr, fa, fb);
}

template <class S>
typename Graph<S>::NodeId ssl_loss_node(Graph<S>& gr, typename Graph<S>::NodeId ref,
                                        typename Graph<S>::NodeId hat, SslVariant variant,
                                        bool frame_wise) {
  switch (variant) {
    case SslVariant::mse: return gr.mse_mean(ref, hat);
    case SslVariant::mae: return gr.l1_mean(ref, hat);
    case SslVariant::cosine: return gr.cosine_loss(ref, hat, frame_wise);
  }
  fail(ErrorCode::contract, "unknown ssl variant");
}

// Differentiable mirror of the wav2mel front end, built from graph ops with
// the identical window, filter bank and clamp constants. Output [T, M].
template <class S>
typename Graph<S>::NodeId wav2mel_graph(Graph<S>& gr, typename Graph<S>::NodeId wave,
                                        const FrontendConfig& fc) {
  validate(fc);
  auto power = gr.stft_power(wave, fc.window_len, fc.frame_shift, fc.dft_size);
  Tensor<S> fb = mel_filterbank<S>(fc);  // [M, bins]
  const int64_t m = fb.shape[0], bins = fb.shape[1];
  Tensor<S> fbt({bins, m});
  for (int64_t i = 0; i < m; ++i)
    for (int64_t k = 0; k < bins; ++k)
      fbt.v[static_cast<size_t>(k * m + i)] = fb.v[static_cast<size_t>(i * bins + k)];
  auto mel_energy = gr.matmul(power, gr.constant(std::move(fbt)));
  return gr.log(gr.clamp_min(mel_energy, static_cast<S>(fc.log_floor)));
}

// Graph form of the Eq-(3) combination, same ordering as the plain version.
template <class S>
typename Graph<S>::NodeId total_generator_loss_node(
    Graph<S>& gr, typename Graph<S>::NodeId j_adv, typename Graph<S>::NodeId j_mel,
    typename Graph<S>::NodeId j_fm_s, typename Graph<S>::NodeId j_fm_t,
    typename Graph<S>::NodeId j_ssl, const LossWeights& w) {
  auto total = j_adv;
  total = gr.add(total, gr.scale(j_mel, static_cast<S>(w.lambda_mel)));
  total = gr.add(total, gr.scale(j_fm_s, static_cast<S>(w.lambda_fm)));
  if (j_fm_t >= 0) total = gr.add(total, gr.scale(j_fm_t, static_cast<S>(w.lambda_fm)));
  if (j_ssl >= 0) total = gr.add(total, gr.scale(j_ssl, static_cast<S>(w.lambda_ssl)));
  return total;
}

}  // namespace lowvoc

#endif  // LOWVOC_LOSSES_HPP
