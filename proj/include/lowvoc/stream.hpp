#ifndef LOWVOC_STREAM_HPP
#define LOWVOC_STREAM_HPP

#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "lowvoc/error.hpp"
#include "lowvoc/generator.hpp"
#include "lowvoc/kernels.hpp"

namespace lowvoc {

namespace detail {

// Stateful causal conv: keeps the last (k-1)*dilation input columns and runs
// the shared conv1d_fwd in valid mode over [history | new block]. This makes
// every window gather identical to the offline causal conv, so streamed
// outputs match offline outputs bit for bit (zero history == left padding).
template <class S>
struct StreamConv {
  const Tensor<S>* w = nullptr;  // [cout, cin, k]
  const Tensor<S>* b = nullptr;
  int dilation = 1;
  int64_t hist_len = 0;
  Tensor<S> hist;  // [cin, hist_len]

  void bind(const Tensor<S>& weight, const Tensor<S>& bias_t, int dil) {
    w = &weight;
    b = &bias_t;
    dilation = dil;
    hist_len = (weight.shape[2] - 1) * static_cast<int64_t>(dil);
    hist = Tensor<S>({weight.shape[1], hist_len});
  }

  void reset() { hist.fill(S(0)); }

  // x: [cin, n] -> out [cout, n]
  Tensor<S> push(const Tensor<S>& x) {
    const int64_t cin = x.shape[0], n = x.shape[1];
    Tensor<S> ext({cin, hist_len + n});
    for (int64_t c = 0; c < cin; ++c) {
      std::copy(hist.data() + c * hist_len, hist.data() + (c + 1) * hist_len,
                ext.data() + c * (hist_len + n));
      std::copy(x.data() + c * n, x.data() + (c + 1) * n,
                ext.data() + c * (hist_len + n) + hist_len);
    }
    Tensor<S> out({w->shape[0], n});
    conv1d_fwd(ext.data(), cin, hist_len + n, w->data(), w->shape[0],
               static_cast<int>(w->shape[2]), 1, dilation, Pad::valid, b->data(), out.data());
    for (int64_t c = 0; c < cin; ++c)
      std::copy(ext.data() + c * (hist_len + n) + n, ext.data() + (c + 1) * (hist_len + n),
                hist.data() + c * hist_len);
    return out;
  }
};

// Transposed conv as zero insertion + stateful causal conv.
template <class S>
struct StreamConvT {
  StreamConv<S> conv;
  int stride = 1;

  void bind(const Tensor<S>& weight, const Tensor<S>& bias_t, int s) {
    conv.bind(weight, bias_t, 1);
    stride = s;
  }
  void reset() { conv.reset(); }

  Tensor<S> push(const Tensor<S>& x) {
    const int64_t cin = x.shape[0], n = x.shape[1];
    Tensor<S> up({cin, n * stride});
    for (int64_t c = 0; c < cin; ++c)
      for (int64_t t = 0; t < n; ++t)
        up.v[static_cast<size_t>(c * n * stride + t * stride)] = x.v[static_cast<size_t>(c * n + t)];
    return conv.push(up);
  }
};

template <class S>
void snake_inplace(Tensor<S>& x, const Tensor<S>& alpha) {
  const int64_t per = x.numel() / x.shape[0];
  for (int64_t c = 0; c < x.shape[0]; ++c)
    for (int64_t i = 0; i < per; ++i)
      x.v[static_cast<size_t>(c * per + i)] =
          snake_val(x.v[static_cast<size_t>(c * per + i)], alpha.v[static_cast<size_t>(c)]);
}

}  // namespace detail

struct LatencyReport {
  double algorithmic_ms = 0.0;
  double mean_push_us = 0.0;
  double max_push_us = 0.0;
  double real_time_factor = 0.0;
  std::vector<double> bucket_edges_us;  // upper edges, last is +inf
  std::vector<int64_t> bucket_counts;
};

// Per-utterance streaming state over a causal generator. One mel frame in,
// upsample_factor samples out, equal to the offline forward on the prefix.
template <class S>
class StreamSession {
 public:
  explicit StreamSession(const Generator<S>& g) : gen_(&g) {
    require(g.cfg.causal, ErrorCode::mode, "streaming requires a causal generator");
    pre_.bind(g.pre_w->value, g.pre_b->value, 1);
    for (size_t i = 0; i < g.stages.size(); ++i) {
      StageState st;
      st.up.bind(g.stages[i].up_w->value, g.stages[i].up_b->value, g.cfg.stride_setup[i]);
      for (const auto& r : g.stages[i].res) {
        ResState rs;
        rs.c1.bind(r.c1w->value, r.c1b->value, r.dilation);
        rs.c2.bind(r.c2w->value, r.c2b->value, 1);
        st.res.push_back(std::move(rs));
      }
      stages_.push_back(std::move(st));
    }
    post_.bind(g.post_w->value, g.post_b->value, 1);
  }

  const Generator<S>& generator() const { return *gen_; }
  int64_t frames_consumed() const { return frames_consumed_; }
  int64_t samples_emitted() const { return samples_emitted_; }

  void reset() {
    pre_.reset();
    for (auto& st : stages_) {
      st.up.reset();
      for (auto& rs : st.res) {
        rs.c1.reset();
        rs.c2.reset();
      }
    }
    post_.reset();
    frames_consumed_ = 0;
    samples_emitted_ = 0;
  }

  // One mel frame (M values) in, upsample_factor samples out.
  std::vector<S> push_mel_frame(const std::vector<S>& frame) {
    require(static_cast<int>(frame.size()) == gen_->cfg.mel_bands, ErrorCode::shape_mismatch,
            "mel frame width does not match generator config");
    Tensor<S> x({gen_->cfg.mel_bands, 1});
    x.v = frame;
    return push_block(x);
  }

  // Several frames at once; [T, M] frontend layout. Output T * factor samples.
  std::vector<S> push_mel(const Tensor<S>& mel) {
    require(mel.rank() == 2 && mel.shape[1] == gen_->cfg.mel_bands, ErrorCode::shape_mismatch,
            "mel width does not match generator config");
    Tensor<S> x({gen_->cfg.mel_bands, mel.shape[0]});
    for (int64_t t = 0; t < mel.shape[0]; ++t)
      for (int64_t b = 0; b < mel.shape[1]; ++b)
        x.v[static_cast<size_t>(b * mel.shape[0] + t)] = mel.v[static_cast<size_t>(t * mel.shape[1] + b)];
    return push_block(x);
  }

  LatencyReport measure_latency(const FrontendConfig& fc, int64_t n_frames, Rng& rng) {
    LatencyReport rep;
    rep.algorithmic_ms = algorithmic_delay_ms(*gen_, fc);
    rep.bucket_edges_us = {50, 100, 200, 500, 1000, 2000, 5000, 10000,
                           std::numeric_limits<double>::infinity()};
    rep.bucket_counts.assign(rep.bucket_edges_us.size(), 0);
    std::vector<S> frame(static_cast<size_t>(gen_->cfg.mel_bands));
    double total_us = 0.0;
    for (int64_t i = 0; i < n_frames; ++i) {
      for (auto& v : frame) v = static_cast<S>(rng.normal(0.0, 1.0));
      const auto t0 = std::chrono::steady_clock::now();
      push_mel_frame(frame);
      const auto t1 = std::chrono::steady_clock::now();
      const double us = std::chrono::duration<double, std::micro>(t1 - t0).count();
      total_us += us;
      rep.max_push_us = std::max(rep.max_push_us, us);
      for (size_t b = 0; b < rep.bucket_edges_us.size(); ++b)
        if (us <= rep.bucket_edges_us[b]) {
          ++rep.bucket_counts[b];
          break;
        }
    }
    rep.mean_push_us = n_frames > 0 ? total_us / static_cast<double>(n_frames) : 0.0;
    const double frame_shift_s =
        static_cast<double>(fc.frame_shift) / static_cast<double>(fc.sample_rate_hz);
    rep.real_time_factor =
        rep.mean_push_us > 0 ? frame_shift_s / (rep.mean_push_us * 1e-6) : 0.0;
    return rep;
  }

 private:
  struct ResState {
    detail::StreamConv<S> c1, c2;
  };
  struct StageState {
    detail::StreamConvT<S> up;
    std::vector<ResState> res;
  };

  const Generator<S>* gen_;
  detail::StreamConv<S> pre_;
  std::vector<StageState> stages_;
  detail::StreamConv<S> post_;
  int64_t frames_consumed_ = 0;
  int64_t samples_emitted_ = 0;

  std::vector<S> push_block(const Tensor<S>& x_in) {
    const int64_t n_frames = x_in.shape[1];
    Tensor<S> h = pre_.push(x_in);
    for (size_t i = 0; i < stages_.size(); ++i) {
      auto& st = stages_[i];
      h = st.up.push(h);
      const auto& res_params = gen_->stages[i].res;
      for (size_t j = 0; j < st.res.size(); ++j) {
        Tensor<S> t1 = h;
        detail::snake_inplace(t1, res_params[j].a1->value);
        t1 = st.res[j].c1.push(t1);
        detail::snake_inplace(t1, res_params[j].a2->value);
        t1 = st.res[j].c2.push(t1);
        for (size_t k = 0; k < h.v.size(); ++k) h.v[k] += t1.v[k];
      }
    }
    detail::snake_inplace(h, gen_->post_alpha->value);
    Tensor<S> out = post_.push(h);
    std::vector<S> samples(out.v.size());
    for (size_t i = 0; i < out.v.size(); ++i) samples[i] = std::tanh(out.v[i]);
    frames_consumed_ += n_frames;
    samples_emitted_ += static_cast<int64_t>(samples.size());
    return samples;
  }
};

}  // namespace lowvoc

#endif  // LOWVOC_STREAM_HPP
