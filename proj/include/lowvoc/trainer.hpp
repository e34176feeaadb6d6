#ifndef LOWVOC_TRAINER_HPP
#define LOWVOC_TRAINER_HPP

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "lowvoc/config_json.hpp"
#include "lowvoc/discriminator.hpp"
#include "lowvoc/error.hpp"
#include "lowvoc/frontend.hpp"
#include "lowvoc/generator.hpp"
#include "lowvoc/graph.hpp"
#include "lowvoc/losses.hpp"
#include "lowvoc/rng.hpp"
#include "lowvoc/ssl.hpp"
#include "lowvoc/weightstore.hpp"

namespace lowvoc {

enum class Stage { pretrain, finetune };
enum class SslTarget { ground_truth, teacher_output };
enum class TsTarget { ground_truth, teacher_output };

struct TrainConfig {
  Stage stage = Stage::pretrain;
  int64_t steps = 2000;
  double learning_rate = 1e-4;  // stage 2 default is 3e-4
  double beta1 = 0.8;
  double beta2 = 0.99;
  double adam_eps = 1e-8;
  double weight_decay = 0.0;
  double lr_decay = 0.999;  // multiplicative, per epoch-equivalent
  LossWeights weights;
  SslVariant ssl_variant = SslVariant::cosine;
  SslTarget ssl_target = SslTarget::ground_truth;
  TsTarget ts_target = TsTarget::teacher_output;
  bool ssl_frame_wise = true;
  uint64_t seed = 1;
  int64_t segment_len = 8192;
  int batch_size = 4;
  FrontendConfig frontend;
  std::vector<int> student_strides;  // teacher training validates against these
  int64_t holdout_every = 10;        // stage-2 held-out eval cadence, 0 = off
};

inline void validate(const TrainConfig& c) {
  require(c.steps > 0, ErrorCode::invalid_config, "steps must be > 0");
  require(c.learning_rate > 0, ErrorCode::invalid_config, "learning_rate must be > 0");
  require(c.batch_size >= 1, ErrorCode::invalid_config, "batch_size must be >= 1");
  require(c.segment_len >= c.frontend.window_len, ErrorCode::invalid_config,
          "segment shorter than analysis window");
  require(c.lr_decay > 0 && c.lr_decay <= 1.0, ErrorCode::invalid_config, "bad lr_decay");
  validate(c.weights);
  validate(c.frontend);
}

inline const char* stage_name(Stage s) { return s == Stage::pretrain ? "pretrain" : "finetune"; }
inline const char* ssl_target_name(SslTarget t) {
  return t == SslTarget::ground_truth ? "ground_truth" : "teacher_output";
}
inline const char* ts_target_name(TsTarget t) {
  return t == TsTarget::ground_truth ? "ground_truth" : "teacher_output";
}

inline nlohmann::json to_json(const TrainConfig& c) {
  nlohmann::json j;
  j["stage"] = stage_name(c.stage);
  j["steps"] = c.steps;
  j["learning_rate"] = c.learning_rate;
  j["beta1"] = c.beta1;
  j["beta2"] = c.beta2;
  j["adam_eps"] = c.adam_eps;
  j["weight_decay"] = c.weight_decay;
  j["lr_decay"] = c.lr_decay;
  j["weights"] = to_json(c.weights);
  j["ssl_variant"] = ssl_variant_name(c.ssl_variant);
  j["ssl_target"] = ssl_target_name(c.ssl_target);
  j["ts_target"] = ts_target_name(c.ts_target);
  j["ssl_frame_wise"] = c.ssl_frame_wise;
  j["seed"] = c.seed;
  j["segment_len"] = c.segment_len;
  j["batch_size"] = c.batch_size;
  j["student_strides"] = c.student_strides;
  j["holdout_every"] = c.holdout_every;
  return j;
}

inline TrainConfig train_from_json(const nlohmann::json& j, const FrontendConfig& fc) {
  TrainConfig c;
  c.frontend = fc;
  const std::string st = j.value("stage", std::string(stage_name(c.stage)));
  if (st == "pretrain")
    c.stage = Stage::pretrain;
  else if (st == "finetune")
    c.stage = Stage::finetune;
  else
    fail(ErrorCode::invalid_config, "unknown stage: " + st);
  c.steps = j.value("steps", c.steps);
  c.learning_rate = j.value("learning_rate", c.stage == Stage::finetune ? 3e-4 : 1e-4);
  c.beta1 = j.value("beta1", c.beta1);
  c.beta2 = j.value("beta2", c.beta2);
  c.adam_eps = j.value("adam_eps", c.adam_eps);
  c.weight_decay = j.value("weight_decay", c.weight_decay);
  c.lr_decay = j.value("lr_decay", c.lr_decay);
  if (j.contains("weights")) c.weights = loss_weights_from_json(j.at("weights"));
  c.ssl_variant = ssl_variant_from_name(
      j.value("ssl_variant", std::string(ssl_variant_name(c.ssl_variant))));
  const std::string sslt = j.value("ssl_target", std::string(ssl_target_name(c.ssl_target)));
  c.ssl_target = sslt == "teacher_output" ? SslTarget::teacher_output : SslTarget::ground_truth;
  const std::string tst = j.value("ts_target", std::string(ts_target_name(c.ts_target)));
  c.ts_target = tst == "ground_truth" ? TsTarget::ground_truth : TsTarget::teacher_output;
  c.ssl_frame_wise = j.value("ssl_frame_wise", c.ssl_frame_wise);
  c.seed = j.value("seed", c.seed);
  c.segment_len = j.value("segment_len", c.segment_len);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.student_strides = j.value("student_strides", c.student_strides);
  c.holdout_every = j.value("holdout_every", c.holdout_every);
  validate(c);
  return c;
}

// ---- dataset ----

template <class S>
struct Dataset {
  std::vector<std::vector<S>> utterances;
  int sample_rate_hz = 16000;
};

// Synthetic harmonic corpus: 2-4 harmonics, f0 in [80, 300] Hz, random
// phases, attack/release envelope over a 0.1 floor, peak-normalized to 0.9.
template <class S>
Dataset<S> make_toy_dataset(uint64_t seed, int n_utterances, double duration_s,
                            int sample_rate_hz = 16000) {
  require(duration_s >= 0.2, ErrorCode::invalid_config, "toy utterances must be >= 0.2 s");
  require(n_utterances >= 1, ErrorCode::invalid_config, "need at least one utterance");
  Dataset<S> ds;
  ds.sample_rate_hz = sample_rate_hz;
  Rng rng(seed);
  const int64_t len = static_cast<int64_t>(duration_s * sample_rate_hz);
  const double two_pi = 2.0 * 3.14159265358979323846;
  for (int u = 0; u < n_utterances; ++u) {
    const int n_harm = 2 + static_cast<int>(rng.uniform_int(3));
    const double f0 = rng.uniform(80.0, 300.0);
    std::vector<double> amp(static_cast<size_t>(n_harm)), phase(static_cast<size_t>(n_harm));
    for (int h = 0; h < n_harm; ++h) {
      amp[static_cast<size_t>(h)] = rng.uniform(0.3, 1.0) / (h + 1);
      phase[static_cast<size_t>(h)] = rng.uniform(0.0, two_pi);
    }
    const double attack = rng.uniform(0.05, 0.2) * static_cast<double>(len);
    const double release = rng.uniform(0.05, 0.2) * static_cast<double>(len);
    const double am_freq = rng.uniform(2.0, 8.0);
    const double am_phase = rng.uniform(0.0, two_pi);

    std::vector<double> x(static_cast<size_t>(len));
    double peak = 0.0;
    for (int64_t i = 0; i < len; ++i) {
      const double t = static_cast<double>(i) / sample_rate_hz;
      double shape = 1.0;
      if (static_cast<double>(i) < attack) shape = static_cast<double>(i) / attack;
      const double tail = static_cast<double>(len - 1 - i);
      if (tail < release) shape = std::min(shape, tail / release);
      const double env = (0.1 + 0.9 * shape) * (1.0 + 0.1 * std::sin(two_pi * am_freq * t + am_phase));
      double s = 0.0;
      for (int h = 0; h < n_harm; ++h)
        s += amp[static_cast<size_t>(h)] * std::sin(two_pi * f0 * (h + 1) * t + phase[static_cast<size_t>(h)]);
      x[static_cast<size_t>(i)] = env * s;
      peak = std::max(peak, std::abs(x[static_cast<size_t>(i)]));
    }
    std::vector<S> out(static_cast<size_t>(len));
    const double norm = peak > 0 ? 0.9 / peak : 0.0;
    for (int64_t i = 0; i < len; ++i) out[static_cast<size_t>(i)] = static_cast<S>(x[static_cast<size_t>(i)] * norm);
    ds.utterances.push_back(std::move(out));
  }
  return ds;
}

// ---- optimizer ----

template <class S>
struct Adam {
  double beta1 = 0.8, beta2 = 0.99, eps = 1e-8, weight_decay = 0.0;
  int64_t t = 0;
  std::vector<Tensor<S>> m, v;

  void init(const ParamSet<S>& ps) {
    m.clear();
    v.clear();
    for (const auto& p : ps.items) {
      m.emplace_back(p->value.shape);
      v.emplace_back(p->value.shape);
    }
    t = 0;
  }

  void step(ParamSet<S>& ps, double lr_now, double grad_scale) {
    require(m.size() == ps.items.size(), ErrorCode::contract, "optimizer not initialized");
    ++t;
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(t));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(t));
    for (size_t i = 0; i < ps.items.size(); ++i) {
      Parameter<S>& p = *ps.items[i];
      if (!p.requires_grad) continue;
      for (size_t k = 0; k < p.value.v.size(); ++k) {
        const double g = static_cast<double>(p.grad.v[k]) * grad_scale +
                         weight_decay * static_cast<double>(p.value.v[k]);
        const double mk = beta1 * static_cast<double>(m[i].v[k]) + (1.0 - beta1) * g;
        const double vk = beta2 * static_cast<double>(v[i].v[k]) + (1.0 - beta2) * g * g;
        m[i].v[k] = static_cast<S>(mk);
        v[i].v[k] = static_cast<S>(vk);
        const double update = (mk / bc1) / (std::sqrt(vk / bc2) + eps);
        p.value.v[k] = static_cast<S>(static_cast<double>(p.value.v[k]) - lr_now * update);
      }
    }
  }
};

template <class S>
struct TrainerState {
  int64_t step = 0;
  Adam<S> opt_g, opt_d;
  Rng rng{0};
};

struct HoldoutPoint {
  int64_t step = 0;
  double fm_t = 0;
  double ssl = 0;
};

struct TrainResult {
  std::vector<LossReport> log;
  std::vector<HoldoutPoint> holdout;
};

inline std::string loss_report_json_line(const LossReport& r) {
  nlohmann::json j;
  j["step"] = r.step;
  j["j_adv"] = r.j_adv;
  j["j_mel"] = r.j_mel;
  j["j_fm_s"] = r.j_fm_s;
  j["j_fm_t"] = r.j_fm_t;
  j["j_ssl"] = r.j_ssl;
  j["j_gen"] = r.j_gen;
  j["j_disc"] = r.j_disc;
  j["lr"] = r.lr;
  return j.dump();
}

// ---- training loops ----

namespace detail {

// Crops are sampled per step up front so the discriminator and generator
// passes see the same batch.
template <class S>
struct Crop {
  Tensor<S> mel;          // [T, M], full segment framing
  Tensor<S> mel_mt;       // [M, T]
  std::vector<S> s_cmp;   // ground truth aligned with generator output
  std::vector<S> s_hat;   // detached student forward (for the D step)
  const std::vector<S>* full = nullptr;
};

template <class S>
Tensor<S> transpose_tm(const Tensor<S>& mel) {
  Tensor<S> out({mel.shape[1], mel.shape[0]});
  for (int64_t t = 0; t < mel.shape[0]; ++t)
    for (int64_t b = 0; b < mel.shape[1]; ++b)
      out.v[static_cast<size_t>(b * mel.shape[0] + t)] = mel.v[static_cast<size_t>(t * mel.shape[1] + b)];
  return out;
}

template <class S>
Tensor<S> rep_to_df(const Tensor<S>& fd) {  // [F, D] -> [D, F]
  Tensor<S> out({fd.shape[1], fd.shape[0]});
  for (int64_t f = 0; f < fd.shape[0]; ++f)
    for (int64_t d = 0; d < fd.shape[1]; ++d)
      out.v[static_cast<size_t>(d * fd.shape[0] + f)] = fd.v[static_cast<size_t>(f * fd.shape[1] + d)];
  return out;
}

}  // namespace detail

// Shared two-step GAN loop. When `teacher`/`teacher_bank`/`encoder` are null
// this is the stage-1 protocol (adv + mel + FM,S); otherwise the Eq-(3)
// fine-tuning objective with frozen teacher and encoder.
template <class S>
TrainResult run_gan_training(Generator<S>& gen, DiscriminatorBank<S>& bank,
                             const Generator<S>* teacher,
                             const DiscriminatorBank<S>* teacher_bank,
                             const SslEncoder<S>* encoder, const Dataset<S>& ds,
                             const TrainConfig& cfg, TrainerState<S>* state,
                             const std::vector<S>* holdout_wave = nullptr) {
  validate(cfg);
  require(!ds.utterances.empty(), ErrorCode::invalid_config, "dataset is empty");
  require(ds.sample_rate_hz == cfg.frontend.sample_rate_hz, ErrorCode::invalid_config,
          "dataset sample rate does not match front end");
  require(gen.cfg.frame_shift == cfg.frontend.frame_shift, ErrorCode::invalid_config,
          "generator frame shift does not match front end");
  for (const auto& u : ds.utterances)
    require(static_cast<int64_t>(u.size()) >= cfg.segment_len, ErrorCode::invalid_config,
            "utterance shorter than training segment");
  const bool stage2 = teacher != nullptr;
  if (stage2) {
    require(teacher_bank != nullptr && encoder != nullptr, ErrorCode::contract,
            "stage 2 needs teacher bank and ssl encoder");
    require(!teacher->cfg.causal, ErrorCode::invalid_config, "teacher must be non-causal");
    require(teacher->cfg.stride_setup == gen.cfg.stride_setup, ErrorCode::invalid_config,
            "teacher/student stride setups differ");
  }

  const int64_t t_seg = frame_count(cfg.segment_len, cfg.frontend);
  const int64_t l_cmp = t_seg * gen.cfg.upsample_factor();
  const int64_t mel_ref_frames = frame_count(l_cmp, cfg.frontend);
  const int m = cfg.frontend.mel_bands;

  TrainerState<S> local_state;
  if (state == nullptr) state = &local_state;
  state->opt_g.beta1 = state->opt_d.beta1 = cfg.beta1;
  state->opt_g.beta2 = state->opt_d.beta2 = cfg.beta2;
  state->opt_g.eps = state->opt_d.eps = cfg.adam_eps;
  state->opt_g.weight_decay = state->opt_d.weight_decay = cfg.weight_decay;
  if (state->step == 0) {
    state->rng = Rng(cfg.seed);
    state->opt_g.init(gen.params);
    state->opt_d.init(bank.params);
  }

  // Discriminator graph: bank on (real, fake-detached).
  Graph<S> dg;
  auto d_real = dg.input(Tensor<S>({l_cmp}));
  auto d_fake = dg.input(Tensor<S>({l_cmp}));
  auto d_real_nodes = bank_graph_forward(dg, bank, d_real, true);
  auto d_fake_nodes = bank_graph_forward(dg, bank, d_fake, true);
  auto d_loss = adv_discriminator_loss(dg, d_real_nodes.scores, d_fake_nodes.scores);

  // Generator graph.
  Graph<S> gg;
  auto g_mel = gg.input(Tensor<S>({m, t_seg}));
  auto g_real = gg.input(Tensor<S>({l_cmp}));
  auto g_mel_ref = gg.input(Tensor<S>({mel_ref_frames, m}));
  auto g_hat = generator_graph_forward(gg, gen, g_mel);
  auto g_fake_nodes = bank_graph_forward(gg, bank, g_hat, false);
  auto g_real_nodes = bank_graph_forward(gg, bank, g_real, false);
  auto j_adv = adv_generator_loss(gg, g_fake_nodes.scores);
  auto j_fm_s = feature_matching_loss(gg, g_real_nodes.features, g_fake_nodes.features);
  auto mel_hat = wav2mel_graph(gg, g_hat, cfg.frontend);
  auto j_mel = gg.l1_mean(g_mel_ref, mel_hat);

  typename Graph<S>::NodeId j_fm_t = -1, j_ssl = -1, g_ssl_ref = -1;
  std::vector<std::vector<typename Graph<S>::NodeId>> tf_ref_nodes;
  if (stage2) {
    // Teacher features of the distillation target arrive as per-crop inputs;
    // shapes come from a probe forward on silence.
    DiscriminatorFeatures<S> probe = bank_forward(*teacher_bank, std::vector<S>(static_cast<size_t>(l_cmp)));
    for (const auto& disc : probe.features) {
      std::vector<typename Graph<S>::NodeId> row;
      for (const auto& t : disc) row.push_back(gg.input(Tensor<S>(t.shape)));
      tf_ref_nodes.push_back(std::move(row));
    }
    auto t_fake_nodes = bank_graph_forward(gg, *teacher_bank, g_hat, false);
    j_fm_t = feature_matching_loss(gg, tf_ref_nodes, t_fake_nodes.features);
    const int64_t ssl_frames = l_cmp / SslConfig::kDownsample;
    g_ssl_ref = gg.input(Tensor<S>({encoder->cfg.width, ssl_frames}));
    auto e_hat = ssl_graph_forward(gg, *encoder, g_hat);
    j_ssl = ssl_loss_node(gg, g_ssl_ref, e_hat, cfg.ssl_variant, cfg.ssl_frame_wise);
  }
  auto g_loss = total_generator_loss_node(gg, j_adv, j_mel, j_fm_s, j_fm_t, j_ssl, cfg.weights);

  const int64_t steps_per_epoch =
      std::max<int64_t>(1, static_cast<int64_t>((ds.utterances.size() + cfg.batch_size - 1) /
                                                static_cast<size_t>(cfg.batch_size)));
  TrainResult result;
  std::vector<detail::Crop<S>> crops(static_cast<size_t>(cfg.batch_size));

  auto eval_holdout = [&](int64_t step_idx) {
    if (!stage2 || holdout_wave == nullptr) return;
    std::vector<S> ho(holdout_wave->begin(),
                      holdout_wave->begin() + static_cast<std::ptrdiff_t>(std::min<int64_t>(
                                                  cfg.segment_len, static_cast<int64_t>(holdout_wave->size()))));
    const Tensor<S> mel = wav2mel(ho, cfg.frontend);
    const std::vector<S> s_hat = generator_forward(gen, mel);
    const std::vector<S> s_bar = generator_forward(*teacher, mel);
    std::vector<S> s_cmp(ho.begin(), ho.begin() + static_cast<std::ptrdiff_t>(s_hat.size()));
    const std::vector<S>& target_a = cfg.ts_target == TsTarget::teacher_output ? s_bar : s_cmp;
    const std::vector<S>& target_b = cfg.ssl_target == SslTarget::ground_truth ? s_cmp : s_bar;
    HoldoutPoint hp;
    hp.step = step_idx;
    hp.fm_t = feature_matching(bank_forward(*teacher_bank, target_a),
                               bank_forward(*teacher_bank, s_hat));
    hp.ssl = ssl_loss(encode(*encoder, target_b), encode(*encoder, s_hat), cfg.ssl_variant);
    result.holdout.push_back(hp);
  };

  for (int64_t step = state->step; step < cfg.steps; ++step) {
    const double lr_now =
        cfg.learning_rate * std::pow(cfg.lr_decay, static_cast<double>(step / steps_per_epoch));

    // sample the batch
    for (auto& crop : crops) {
      const size_t u = static_cast<size_t>(state->rng.uniform_int(ds.utterances.size()));
      const auto& utt = ds.utterances[u];
      const int64_t max_off = static_cast<int64_t>(utt.size()) - cfg.segment_len;
      const int64_t off =
          max_off > 0 ? static_cast<int64_t>(state->rng.uniform_int(static_cast<uint64_t>(max_off + 1))) : 0;
      std::vector<S> seg(utt.begin() + static_cast<std::ptrdiff_t>(off),
                         utt.begin() + static_cast<std::ptrdiff_t>(off + cfg.segment_len));
      crop.mel = wav2mel(seg, cfg.frontend);
      crop.mel_mt = detail::transpose_tm(crop.mel);
      crop.s_cmp.assign(seg.begin(), seg.begin() + static_cast<std::ptrdiff_t>(l_cmp));
      crop.s_hat = generator_forward(gen, crop.mel);
    }

    // discriminator pass
    double d_loss_acc = 0;
    for (int b = 0; b < cfg.batch_size; ++b) {
      dg.set_input(d_real, Tensor<S>({l_cmp}, crops[static_cast<size_t>(b)].s_cmp));
      dg.set_input(d_fake, Tensor<S>({l_cmp}, crops[static_cast<size_t>(b)].s_hat));
      dg.forward();
      dg.backward(d_loss, b > 0);
      d_loss_acc += static_cast<double>(dg.value(d_loss).v[0]);
    }
    state->opt_d.step(bank.params, lr_now, 1.0 / cfg.batch_size);

    // generator pass (discriminator already updated)
    LossReport rep;
    rep.step = step + 1;
    rep.lr = lr_now;
    rep.j_disc = d_loss_acc / cfg.batch_size;
    for (int b = 0; b < cfg.batch_size; ++b) {
      const auto& crop = crops[static_cast<size_t>(b)];
      gg.set_input(g_mel, crop.mel_mt);
      gg.set_input(g_real, Tensor<S>({l_cmp}, crop.s_cmp));
      std::vector<S> ref(crop.s_cmp);
      gg.set_input(g_mel_ref, wav2mel(ref, cfg.frontend));
      if (stage2) {
        std::vector<S> s_bar;
        if (cfg.ts_target == TsTarget::teacher_output || cfg.ssl_target == SslTarget::teacher_output)
          s_bar = generator_forward(*teacher, crop.mel);
        const std::vector<S>& target_a =
            cfg.ts_target == TsTarget::teacher_output ? s_bar : crop.s_cmp;
        DiscriminatorFeatures<S> tf = bank_forward(*teacher_bank, target_a);
        for (size_t i = 0; i < tf_ref_nodes.size(); ++i)
          for (size_t l = 0; l < tf_ref_nodes[i].size(); ++l)
            gg.set_input(tf_ref_nodes[i][l], tf.features[i][l]);
        const std::vector<S>& target_b =
            cfg.ssl_target == SslTarget::ground_truth ? crop.s_cmp : s_bar;
        gg.set_input(g_ssl_ref, detail::rep_to_df(encode(*encoder, target_b).frames));
      }
      gg.forward();
      gg.backward(g_loss, b > 0);
      rep.j_adv += static_cast<double>(gg.value(j_adv).v[0]);
      rep.j_mel += static_cast<double>(gg.value(j_mel).v[0]);
      rep.j_fm_s += static_cast<double>(gg.value(j_fm_s).v[0]);
      if (stage2) {
        rep.j_fm_t += static_cast<double>(gg.value(j_fm_t).v[0]);
        rep.j_ssl += static_cast<double>(gg.value(j_ssl).v[0]);
      }
      rep.j_gen += static_cast<double>(gg.value(g_loss).v[0]);
    }
    state->opt_g.step(gen.params, lr_now, 1.0 / cfg.batch_size);

    rep.j_adv /= cfg.batch_size;
    rep.j_mel /= cfg.batch_size;
    rep.j_fm_s /= cfg.batch_size;
    rep.j_fm_t /= cfg.batch_size;
    rep.j_ssl /= cfg.batch_size;
    rep.j_gen /= cfg.batch_size;
    for (double x : {rep.j_adv, rep.j_mel, rep.j_fm_s, rep.j_fm_t, rep.j_ssl, rep.j_gen, rep.j_disc})
      require(std::isfinite(x), ErrorCode::contract,
              "training diverged: non-finite loss at step " + std::to_string(rep.step));
    result.log.push_back(rep);
    state->step = step + 1;

    if (cfg.holdout_every > 0 &&
        ((step + 1) % cfg.holdout_every == 0 || step + 1 == cfg.steps || step + 1 == 10))
      eval_holdout(step + 1);
  }
  return result;
}

// Stage 1: adversarial pre-training of the causal student.
template <class S>
TrainResult stage1_pretrain(Generator<S>& student, DiscriminatorBank<S>& student_bank,
                            const Dataset<S>& ds, const TrainConfig& cfg,
                            TrainerState<S>* state = nullptr) {
  require(student.cfg.causal, ErrorCode::invalid_config, "stage 1 student must be causal");
  return run_gan_training<S>(student, student_bank, nullptr, nullptr, nullptr, ds, cfg, state);
}

// Teacher training: same protocol on a non-causal generator whose stride
// setup must match the intended student.
template <class S>
TrainResult train_teacher(Generator<S>& teacher, DiscriminatorBank<S>& teacher_bank,
                          const Dataset<S>& ds, const TrainConfig& cfg,
                          TrainerState<S>* state = nullptr) {
  require(!teacher.cfg.causal, ErrorCode::invalid_config, "teacher must be non-causal");
  if (!cfg.student_strides.empty())
    require(teacher.cfg.stride_setup == cfg.student_strides, ErrorCode::invalid_config,
            "teacher stride setup does not match the intended student");
  return run_gan_training<S>(teacher, teacher_bank, nullptr, nullptr, nullptr, ds, cfg, state);
}

// Stage 2: Eq-(3) fine-tuning with frozen teacher, teacher bank and encoder.
template <class S>
TrainResult stage2_finetune(Generator<S>& student, DiscriminatorBank<S>& student_bank,
                            const Generator<S>& teacher, const DiscriminatorBank<S>& teacher_bank,
                            const SslEncoder<S>& encoder, const Dataset<S>& ds,
                            const TrainConfig& cfg, TrainerState<S>* state = nullptr,
                            const std::vector<S>* holdout_wave = nullptr) {
  require(student.cfg.causal, ErrorCode::invalid_config, "stage 2 student must be causal");
  const uint64_t teacher_sum_before = params_checksum(teacher.params);
  const uint64_t tbank_sum_before = params_checksum(teacher_bank.params);
  const uint64_t enc_sum_before = params_checksum(encoder.params);
  TrainResult r = run_gan_training<S>(student, student_bank, &teacher, &teacher_bank, &encoder,
                                      ds, cfg, state, holdout_wave);
  require(params_checksum(teacher.params) == teacher_sum_before &&
              params_checksum(teacher_bank.params) == tbank_sum_before &&
              params_checksum(encoder.params) == enc_sum_before,
          ErrorCode::contract, "frozen teacher/encoder parameters changed during fine-tune");
  return r;
}

// ---- checkpoints ----

template <class S>
void pack_adam(WeightStore& ws, const Adam<S>& opt, const ParamSet<S>& ps,
               const std::string& prefix) {
  for (size_t i = 0; i < ps.items.size(); ++i) {
    StoredTensor tm, tv;
    tm.name = prefix + ".m." + ps.items[i]->name;
    tm.shape = opt.m[i].shape;
    tm.data.assign(opt.m[i].v.begin(), opt.m[i].v.end());
    tv.name = prefix + ".v." + ps.items[i]->name;
    tv.shape = opt.v[i].shape;
    tv.data.assign(opt.v[i].v.begin(), opt.v[i].v.end());
    ws.tensors.push_back(std::move(tm));
    ws.tensors.push_back(std::move(tv));
  }
}

template <class S>
void unpack_adam(const WeightStore& ws, Adam<S>& opt, const ParamSet<S>& ps,
                 const std::string& prefix) {
  opt.init(ps);
  for (size_t i = 0; i < ps.items.size(); ++i) {
    const StoredTensor* tm = ws.find(prefix + ".m." + ps.items[i]->name);
    const StoredTensor* tv = ws.find(prefix + ".v." + ps.items[i]->name);
    require(tm && tv, ErrorCode::integrity, "checkpoint missing optimizer state for " +
                                                ps.items[i]->name);
    for (size_t k = 0; k < tm->data.size(); ++k) opt.m[i].v[k] = static_cast<S>(tm->data[k]);
    for (size_t k = 0; k < tv->data.size(); ++k) opt.v[i].v[k] = static_cast<S>(tv->data[k]);
  }
}

template <class S>
void save_checkpoint(const std::string& path, const Generator<S>& gen,
                     const DiscriminatorBank<S>& bank, const TrainerState<S>& state,
                     const TrainConfig& cfg) {
  WeightStore ws;
  pack_params(ws, gen.params);
  pack_params(ws, bank.params);
  pack_adam(ws, state.opt_g, gen.params, "opt.g");
  pack_adam(ws, state.opt_d, bank.params, "opt.d");
  nlohmann::json meta;
  meta["kind"] = "checkpoint";
  meta["step"] = state.step;
  meta["opt_g_t"] = state.opt_g.t;
  meta["opt_d_t"] = state.opt_d.t;
  meta["rng"] = state.rng.save_state();
  meta["generator"] = to_json(gen.cfg);
  meta["discriminators"] = to_json(bank.cfg);
  meta["bank_prefix"] = bank.prefix;
  meta["frontend"] = to_json(cfg.frontend);
  meta["train"] = to_json(cfg);
  ws.meta_json = meta.dump();
  save_weight_store(path, ws);
}

template <class S>
struct LoadedCheckpoint {
  Generator<S> gen;
  DiscriminatorBank<S> bank;
  TrainerState<S> state;
  FrontendConfig frontend;
  nlohmann::json train_json;
};

template <class S>
LoadedCheckpoint<S> load_checkpoint(const std::string& path) {
  const WeightStore ws = load_weight_store(path);
  nlohmann::json meta = nlohmann::json::parse(ws.meta_json);
  require(meta.value("kind", "") == "checkpoint", ErrorCode::integrity,
          "not a checkpoint file: " + path);
  LoadedCheckpoint<S> out;
  const GeneratorConfig gcfg = generator_from_json(meta.at("generator"));
  const DiscriminatorBankConfig bcfg = discriminators_from_json(meta.at("discriminators"));
  out.frontend = frontend_from_json(meta.at("frontend"));
  out.train_json = meta.value("train", nlohmann::json::object());
  out.gen = build_generator<S>(gcfg, 0);
  unpack_params(ws, out.gen.params);
  out.bank = build_discriminator_bank<S>(bcfg, 0, meta.value("bank_prefix", std::string("sd")));
  unpack_params(ws, out.bank.params);
  out.state.step = meta.value("step", 0);
  out.state.rng.load_state(meta.value("rng", Rng(0).save_state()));
  unpack_adam(ws, out.state.opt_g, out.gen.params, "opt.g");
  unpack_adam(ws, out.state.opt_d, out.bank.params, "opt.d");
  out.state.opt_g.t = meta.value("opt_g_t", 0);
  out.state.opt_d.t = meta.value("opt_d_t", 0);
  return out;
}

}  // namespace lowvoc

#endif  // LOWVOC_TRAINER_HPP
