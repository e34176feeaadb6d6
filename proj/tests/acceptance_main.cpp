// Acceptance suite: runs all ten criteria and prints one PASS/FAIL line per
// criterion. Exit code 0 iff everything passed. --only N runs one criterion
// (later criteria reuse artifacts from earlier ones and rebuild them on
// demand); --quick shrinks the training criteria for smoke runs.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "lowvoc/audio_io.hpp"
#include "lowvoc/gradsuite.hpp"
#include "lowvoc/metrics.hpp"
#include "lowvoc/stream.hpp"
#include "lowvoc/trainer.hpp"

using namespace lowvoc;

namespace {

struct Ctx {
  bool quick = false;
  int64_t stage1_steps = 2000;
  int64_t stage2_steps = 2000;
  int64_t teacher_steps = 600;
  int64_t ablation_steps = 100;

  // toy fixtures, built once
  FrontendConfig frontend;  // Nw=512, Ns=128 @ 16 kHz
  GeneratorConfig student_cfg;
  DiscriminatorBankConfig bank_cfg;
  Dataset<float> corpus;
  Dataset<float> holdout;

  // artifacts shared between criteria
  bool have_stage1 = false;
  Generator<float> student;
  DiscriminatorBank<float> student_bank;
  bool have_teacher = false;
  Generator<float> teacher;
  DiscriminatorBank<float> teacher_bank;
  SslEncoder<float> encoder;

  Ctx() : encoder(build_ssl_encoder<float>(0x55170, 64)) {
    student_cfg.stride_setup = {8, 4, 2, 2};
    student_cfg.causal = true;
    student_cfg.base_channels = 32;
    student_cfg.mel_bands = 80;
    student_cfg.frame_shift = 128;
    // toy acceptance bank: canonical periods/resolutions, starting width 16
    bank_cfg.mpd_channels = {16, 32};
    bank_cfg.mrd_channels = {16, 32};
    corpus = make_toy_dataset<float>(7, 10, 1.0);
    holdout = make_toy_dataset<float>(99, 1, 1.0);
  }

  TrainConfig toy_train(Stage stage) const {
    TrainConfig tc;
    tc.stage = stage;
    tc.frontend = frontend;
    tc.segment_len = 2048;  // 13 frames -> 1664 aligned samples per crop
    tc.batch_size = 2;
    tc.seed = 1;
    tc.learning_rate = stage == Stage::finetune ? 3e-4 : 1e-4;
    tc.holdout_every = 10;
    return tc;
  }

  void ensure_stage1() {
    if (have_stage1) return;
    student = build_generator<float>(student_cfg, 101);
    student_bank = build_discriminator_bank<float>(bank_cfg, 102, "sd");
    TrainConfig tc = toy_train(Stage::pretrain);
    tc.steps = stage1_steps;
    stage1_result = stage1_pretrain(student, student_bank, corpus, tc);
    have_stage1 = true;
  }

  void ensure_teacher() {
    if (have_teacher) return;
    GeneratorConfig tcfg = student_cfg;
    tcfg.causal = false;
    teacher = build_generator<float>(tcfg, 201);
    teacher_bank = build_discriminator_bank<float>(bank_cfg, 202, "td");
    TrainConfig tc = toy_train(Stage::pretrain);
    tc.steps = teacher_steps;
    tc.student_strides = student_cfg.stride_setup;
    train_teacher(teacher, teacher_bank, corpus, tc);
    teacher.params.set_requires_grad(false);
    teacher_bank.params.set_requires_grad(false);
    have_teacher = true;
  }

  TrainResult stage1_result;
};

double ma10(const std::vector<LossReport>& log, int64_t step) {
  double acc = 0;
  int64_t n = 0;
  for (const auto& r : log)
    if (r.step > step - 10 && r.step <= step) {
      acc += r.j_mel;
      ++n;
    }
  return n ? acc / static_cast<double>(n) : 0.0;
}

// ---------------- criteria ----------------

bool c1_delay(Ctx&, std::string& detail) {
  struct Case {
    std::vector<int> strides;
    int ns, nw;
    double expect;
  };
  const std::vector<Case> cases = {
      {{8, 4, 2, 2}, 128, 512, 32.0},
      {{4, 2, 2, 2, 2, 2}, 128, 512, 32.0},
      {{8, 8, 2, 2}, 256, 1024, 64.0},
      {{4, 4, 2, 2, 2, 2}, 256, 1024, 64.0},
  };
  std::ostringstream os;
  bool ok = true;
  for (const auto& c : cases) {
    GeneratorConfig gc;
    gc.stride_setup = c.strides;
    gc.causal = true;
    gc.base_channels = 8;
    gc.mel_bands = 16;
    gc.frame_shift = c.ns;
    FrontendConfig fc;
    fc.window_len = c.nw;
    fc.frame_shift = c.ns;
    fc.dft_size = c.nw;
    const auto g = build_generator<float>(gc, 1);
    const double ms = algorithmic_delay_ms(g, fc);
    ok = ok && ms == c.expect && lookahead_samples(g) == 0;
    os << ms << "ms ";
  }
  detail = "reported " + os.str() + "(exact match required)";
  return ok;
}

bool c2_causality(Ctx&, std::string& detail) {
  const std::vector<std::pair<std::vector<int>, int>> setups = {
      {{8, 4, 2, 2}, 128}, {{4, 2, 2, 2, 2, 2}, 128}, {{8, 8, 2, 2}, 256}, {{4, 4, 2, 2, 2, 2}, 256}};
  int causal_ok = 0, noncausal_violations = 0, total = 0;
  for (const auto& [strides, ns] : setups) {
    GeneratorConfig gc;
    gc.stride_setup = strides;
    gc.base_channels = 8;
    gc.mel_bands = 16;
    gc.frame_shift = ns;
    bool any_violation = false;
    for (uint64_t seed = 0; seed < 10; ++seed) {
      ++total;
      Rng rng(seed * 17 + 3);
      Tensor<float> mel({8, 16});
      for (auto& v : mel.v) v = static_cast<float>(rng.normal());
      const int64_t t = 1 + static_cast<int64_t>(rng.uniform_int(6));
      Tensor<float> pert = mel;
      for (int64_t b = 0; b < 16; ++b) pert.v[static_cast<size_t>(t * 16 + b)] += 1.0f;

      gc.causal = true;
      const auto g = build_generator<float>(gc, seed + 500);
      const auto base = generator_forward(g, mel);
      const auto out = generator_forward(g, pert);
      bool prefix_equal = true;
      for (int64_t i = 0; i < t * ns; ++i) prefix_equal = prefix_equal && out[static_cast<size_t>(i)] == base[static_cast<size_t>(i)];
      if (prefix_equal) ++causal_ok;

      gc.causal = false;
      const auto gn = build_generator<float>(gc, seed + 500);
      const auto base_n = generator_forward(gn, mel);
      const auto out_n = generator_forward(gn, pert);
      for (int64_t i = 0; i < t * ns && !any_violation; ++i)
        any_violation = out_n[static_cast<size_t>(i)] != base_n[static_cast<size_t>(i)];
    }
    if (any_violation) ++noncausal_violations;
  }
  detail = std::to_string(causal_ok) + "/" + std::to_string(total) +
           " causal prefixes bit-identical; non-causal violated in " +
           std::to_string(noncausal_violations) + "/4 setups";
  return causal_ok == total && noncausal_violations == 4;
}

bool c3_stream_offline(Ctx&, std::string& detail) {
  const std::vector<std::pair<std::vector<int>, int>> setups = {
      {{8, 4, 2, 2}, 128}, {{4, 2, 2, 2, 2, 2}, 128}, {{8, 8, 2, 2}, 256}, {{4, 4, 2, 2, 2, 2}, 256}};
  double worst_f = 0, worst_d = 0;
  for (const auto& [strides, ns] : setups) {
    GeneratorConfig gc;
    gc.stride_setup = strides;
    gc.causal = true;
    gc.base_channels = 8;
    gc.mel_bands = 16;
    gc.frame_shift = ns;
    for (uint64_t seed = 0; seed < 10; ++seed) {
      Rng rng(seed * 13 + 1);
      const int64_t t_count = 10;
      Tensor<float> mel({t_count, 16});
      for (auto& v : mel.v) v = static_cast<float>(rng.normal());

      const auto gf = build_generator<float>(gc, seed + 900);
      const auto offline = generator_forward(gf, mel);
      StreamSession<float> sess(gf);
      std::vector<float> streamed;
      int64_t t = 0;
      while (t < t_count) {
        const int64_t n = std::min<int64_t>(1 + static_cast<int64_t>(rng.uniform_int(3)), t_count - t);
        Tensor<float> block({n, 16});
        std::copy(mel.data() + t * 16, mel.data() + (t + n) * 16, block.data());
        const auto out = sess.push_mel(block);
        streamed.insert(streamed.end(), out.begin(), out.end());
        t += n;
      }
      for (size_t i = 0; i < offline.size(); ++i)
        worst_f = std::max(worst_f, std::abs(static_cast<double>(offline[i]) - streamed[i]));

      const auto gd = build_generator<double>(gc, seed + 900);
      const auto meld = mel.cast<double>();
      const auto offlined = generator_forward(gd, meld);
      StreamSession<double> sessd(gd);
      const auto streamedd = sessd.push_mel(meld);
      for (size_t i = 0; i < offlined.size(); ++i)
        worst_d = std::max(worst_d, std::abs(offlined[i] - streamedd[i]));
    }
  }
  std::ostringstream os;
  os << "max abs diff float " << worst_f << " (<=1e-5), double " << worst_d << " (<=1e-10)";
  detail = os.str();
  return worst_f <= 1e-5 && worst_d <= 1e-10;
}

bool c4_gradients(Ctx&, std::string& detail) {
  const GradSuiteResult res = run_grad_suite(20240101, true);
  int64_t composite_samples = 0;
  for (const auto& e : res.entries)
    if (e.name == "generator_eq3_composite") composite_samples = e.samples;
  std::ostringstream os;
  os << "worst rel err " << res.worst() << " (<1e-4), composite over " << composite_samples
     << " parameters";
  detail = os.str();
  return res.pass(1e-4) && composite_samples >= 200;
}

bool c5_loss_identities(Ctx&, std::string& detail) {
  bool ok = true;
  // FM = 0 on identical inputs, through a real bank
  DiscriminatorBankConfig dc;
  dc.periods = {2, 3};
  dc.resolutions = {{64, 16, 64}};
  dc.mpd_channels = {4};
  dc.mrd_channels = {4};
  const auto bank = build_discriminator_bank<float>(dc, 7, "td");
  Rng rng(1);
  std::vector<float> wave(400);
  for (auto& x : wave) x = static_cast<float>(rng.uniform(-0.6, 0.6));
  const auto f = bank_forward(bank, wave);
  ok = ok && feature_matching(f, f) == 0.0;

  // cosine fixtures 0 / 1 / 2
  auto rep = [](std::vector<double> v, int64_t frames, int64_t dim) {
    SslRepresentation<double> r;
    r.frames = Tensor<double>({frames, dim}, std::move(v));
    return r;
  };
  const auto ident = rep({0.3, 0.4, 0.5, 0.6}, 2, 2);
  ok = ok && std::abs(ssl_loss(ident, ident, SslVariant::cosine)) < 1e-12;
  ok = ok && std::abs(ssl_loss(rep({1, 0}, 1, 2), rep({0, 1}, 1, 2), SslVariant::cosine) - 1.0) < 1e-12;
  ok = ok && std::abs(ssl_loss(rep({1, 0.5}, 1, 2), rep({-1, -0.5}, 1, 2), SslVariant::cosine) - 2.0) < 1e-12;

  // Eq (3) substitution with the paper lambdas, exact
  LossWeights w;
  const double total = total_generator_loss(1.0, 0.1, 0.2, 0.3, 0.5, w);
  ok = ok && total == 8.5;
  std::ostringstream os;
  os << "FM(identical)=0, cosine fixtures 0/1/2, Eq(3) substitution = " << total;
  detail = os.str();
  return ok;
}

bool c6_stage1(Ctx& ctx, std::string& detail) {
  ctx.ensure_stage1();
  const auto& log = ctx.stage1_result.log;
  const double early = ma10(log, 10);
  const double late = ma10(log, log.back().step);
  std::ostringstream os;
  os << "J_mel moving average " << early << " @10 -> " << late << " @" << log.back().step
     << " (need <= 50%)";
  detail = os.str();
  return late <= 0.5 * early;
}

bool c7_stage2(Ctx& ctx, std::string& detail) {
  ctx.ensure_stage1();
  ctx.ensure_teacher();
  const uint64_t tg = params_checksum(ctx.teacher.params);
  const uint64_t tb = params_checksum(ctx.teacher_bank.params);
  const uint64_t te = params_checksum(ctx.encoder.params);

  TrainConfig tc = ctx.toy_train(Stage::finetune);
  tc.steps = ctx.stage2_steps;
  // Table-2 best configuration: cosine, ssl target s, T/S target s-bar
  tc.ssl_variant = SslVariant::cosine;
  tc.ssl_target = SslTarget::ground_truth;
  tc.ts_target = TsTarget::teacher_output;
  const TrainResult r = stage2_finetune<float>(ctx.student, ctx.student_bank, ctx.teacher,
                                        ctx.teacher_bank, ctx.encoder, ctx.corpus, tc, nullptr,
                                        &ctx.holdout.utterances[0]);
  bool ok = params_checksum(ctx.teacher.params) == tg &&
            params_checksum(ctx.teacher_bank.params) == tb &&
            params_checksum(ctx.encoder.params) == te;
  bool terms_ok = r.log.size() == static_cast<size_t>(tc.steps);
  for (const auto& rep : r.log)
    terms_ok = terms_ok && std::isfinite(rep.j_adv) && rep.j_mel > 0 && rep.j_fm_s > 0 &&
               rep.j_fm_t > 0 && rep.j_ssl > 0;

  double fm10 = -1, ssl10 = -1, fm_end = -1, ssl_end = -1;
  for (const auto& h : r.holdout) {
    if (h.step == 10) {
      fm10 = h.fm_t;
      ssl10 = h.ssl;
    }
    if (h.step == tc.steps) {
      fm_end = h.fm_t;
      ssl_end = h.ssl;
    }
  }
  std::ostringstream os;
  os << "held-out J_fm_t " << fm10 << " -> " << fm_end << ", J_ssl " << ssl10 << " -> " << ssl_end
     << ", frozen checksums " << (ok ? "stable" : "CHANGED");
  detail = os.str();
  return ok && terms_ok && fm10 > 0 && ssl10 > 0 && fm_end < fm10 && ssl_end < ssl10;
}

bool c8_ablations(Ctx& ctx, std::string& detail) {
  ctx.ensure_stage1();
  ctx.ensure_teacher();
  struct Combo {
    SslVariant variant;
    SslTarget ssl_target;
    TsTarget ts_target;
  };
  const std::vector<Combo> combos = {
      {SslVariant::cosine, SslTarget::ground_truth, TsTarget::teacher_output},
      {SslVariant::mse, SslTarget::ground_truth, TsTarget::teacher_output},
      {SslVariant::mae, SslTarget::ground_truth, TsTarget::teacher_output},
      {SslVariant::cosine, SslTarget::teacher_output, TsTarget::teacher_output},
      {SslVariant::cosine, SslTarget::ground_truth, TsTarget::ground_truth},
      {SslVariant::mse, SslTarget::teacher_output, TsTarget::ground_truth},
  };
  std::vector<double> ssl_first, fm_first;
  for (const auto& combo : combos) {
    // fresh copy of the stage-1 student per ablation run
    Generator<float> student = build_generator<float>(ctx.student_cfg, 0);
    for (size_t i = 0; i < student.params.items.size(); ++i)
      student.params.items[i]->value.v = ctx.student.params.items[i]->value.v;
    DiscriminatorBank<float> sbank = build_discriminator_bank<float>(ctx.bank_cfg, 0, "sd");
    for (size_t i = 0; i < sbank.params.items.size(); ++i)
      sbank.params.items[i]->value.v = ctx.student_bank.params.items[i]->value.v;

    TrainConfig tc = ctx.toy_train(Stage::finetune);
    tc.steps = ctx.ablation_steps;
    tc.ssl_variant = combo.variant;
    tc.ssl_target = combo.ssl_target;
    tc.ts_target = combo.ts_target;
    tc.holdout_every = 0;
    const TrainResult r = stage2_finetune(student, sbank, ctx.teacher, ctx.teacher_bank,
                                          ctx.encoder, ctx.corpus, tc);
    if (r.log.size() != static_cast<size_t>(tc.steps)) return false;
    for (const auto& rep : r.log)
      if (!std::isfinite(rep.j_gen) || !std::isfinite(rep.j_ssl)) return false;
    ssl_first.push_back(r.log.front().j_ssl);
    fm_first.push_back(r.log.front().j_fm_t);
  }
  // distinct logged term values across the ablation axes
  bool distinct = ssl_first[0] != ssl_first[1] && ssl_first[1] != ssl_first[2] &&
                  ssl_first[0] != ssl_first[3] && fm_first[0] != fm_first[4];
  std::ostringstream os;
  os << combos.size() << " configurations x " << ctx.ablation_steps
     << " steps, distinct terms: " << (distinct ? "yes" : "NO");
  detail = os.str();
  return distinct;
}

bool c9_metrics(Ctx&, std::string& detail) {
  FrontendConfig fc;
  std::vector<double> s(4096);
  for (size_t i = 0; i < s.size(); ++i)
    s[i] = 0.5 * std::sin(2 * 3.14159265358979323846 * 210.0 * static_cast<double>(i) / 16000.0);
  const double self = mcd(s, s, fc).db;

  // single-coefficient closed form
  const int m_count = fc.mel_bands;
  const double delta = 0.81;
  std::vector<double> base(static_cast<size_t>(m_count), -2.0), shifted = base;
  const double scale = std::sqrt(2.0 / m_count);
  for (int m = 0; m < m_count; ++m)
    shifted[static_cast<size_t>(m)] +=
        delta * scale * std::cos(3.14159265358979323846 * (m + 0.5) / m_count);
  const auto ca = dct2_ortho(base.data(), m_count);
  const auto cb = dct2_ortho(shifted.data(), m_count);
  double sq = 0;
  for (int d = 1; d <= 13; ++d) {
    const double diff = ca[static_cast<size_t>(d)] - cb[static_cast<size_t>(d)];
    sq += diff * diff;
  }
  const double got = 10.0 / std::log(10.0) * std::sqrt(2.0 * sq);
  const double expect = 10.0 / std::log(10.0) * std::sqrt(2.0) * delta;

  // FLOPs oracle (same enumeration as the unit test, toy (8,4,2,2))
  GeneratorConfig gc;
  gc.stride_setup = {8, 4, 2, 2};
  gc.base_channels = 32;
  gc.mel_bands = 80;
  gc.frame_shift = 128;
  gc.causal = true;
  const double frames = 16000.0 / 128.0;
  double oracle = frames * 32 * (2.0 * 80 * 7 + 1);
  double len = frames;
  int ch = 32;
  const int strides[4] = {8, 4, 2, 2};
  for (int i = 0; i < 4; ++i) {
    const int out_ch = ch / 2;
    oracle += len * ch * out_ch * (2 * strides[i]) * 2 + len * strides[i] * out_ch;
    len *= strides[i];
    ch = out_ch;
    for (int j = 0; j < 2; ++j)
      oracle += 6.0 * len * ch + len * ch * (2.0 * ch * 3 + 1) + 6.0 * len * ch +
                len * ch * (2.0 * ch * 3 + 1) + len * ch;
  }
  oracle += 6.0 * len * ch + len * (2.0 * ch * 7 + 1) + len;
  const double counted = count_flops(gc, 16000).total;
  gc.causal = false;
  const double counted_nc = count_flops(gc, 16000).total;

  const bool ok = self == 0.0 && std::abs(got - expect) <= 1e-9 &&
                  std::abs(counted - oracle) / oracle <= 0.05 && counted == counted_nc;
  std::ostringstream os;
  os << "mcd(s,s)=" << self << ", closed-form err " << std::abs(got - expect) << ", flops "
     << counted * 1e-9 << "G vs oracle " << oracle * 1e-9 << "G, causal==non-causal "
     << (counted == counted_nc ? "yes" : "NO");
  detail = os.str();
  return ok;
}

bool c10_formats(Ctx&, std::string& detail) {
  namespace fs = std::filesystem;
  const std::string dir = (fs::temp_directory_path() / "lowvoc_acceptance").string();
  fs::create_directories(dir);
  bool ok = true;

  // MEL1 bit-exact round trip
  Rng rng(12);
  Tensor<float> mel({9, 20});
  for (auto& v : mel.v) v = static_cast<float>(rng.normal());
  write_mel(dir + "/a.mel", mel);
  ok = ok && read_mel(dir + "/a.mel").v == mel.v;

  // weight store bit-exact + integrity on truncation
  WeightStore ws;
  StoredTensor t;
  t.name = "x";
  t.shape = {64};
  for (int i = 0; i < 64; ++i) t.data.push_back(static_cast<float>(rng.normal()));
  ws.tensors.push_back(t);
  save_weight_store(dir + "/w.lvws", ws);
  ok = ok && load_weight_store(dir + "/w.lvws").tensors[0].data == t.data;
  fs::resize_file(dir + "/w.lvws", fs::file_size(dir + "/w.lvws") - 3);
  bool integrity_raised = false;
  try {
    load_weight_store(dir + "/w.lvws");
  } catch (const Error& e) {
    integrity_raised = e.code() == ErrorCode::integrity;
  }
  ok = ok && integrity_raised;

  // checkpoint round trip + resume == uninterrupted, tiny config
  FrontendConfig fc;
  fc.window_len = 64;
  fc.frame_shift = 16;
  fc.dft_size = 64;
  fc.mel_bands = 10;
  GeneratorConfig gc;
  gc.stride_setup = {4, 2, 2};
  gc.causal = true;
  gc.base_channels = 4;
  gc.mel_bands = 10;
  gc.frame_shift = 16;
  gc.io_kernel = 3;
  gc.resblock_dilations = {{1}};
  DiscriminatorBankConfig dc;
  dc.periods = {2, 3};
  dc.resolutions = {{64, 16, 64}};
  dc.mpd_channels = {4, 8};
  dc.mrd_channels = {4, 8};
  TrainConfig tc;
  tc.frontend = fc;
  tc.segment_len = 512;
  tc.batch_size = 2;
  tc.seed = 5;
  const auto ds = make_toy_dataset<float>(3, 3, 0.25);

  auto g1 = build_generator<float>(gc, 61);
  auto b1 = build_discriminator_bank<float>(dc, 62, "sd");
  TrainerState<float> s1;
  tc.steps = 6;
  const TrainResult full = stage1_pretrain(g1, b1, ds, tc, &s1);

  auto g2 = build_generator<float>(gc, 61);
  auto b2 = build_discriminator_bank<float>(dc, 62, "sd");
  TrainerState<float> s2;
  tc.steps = 3;
  stage1_pretrain(g2, b2, ds, tc, &s2);
  save_checkpoint(dir + "/ck.lvws", g2, b2, s2, tc);
  auto loaded = load_checkpoint<float>(dir + "/ck.lvws");
  ok = ok && params_checksum(loaded.gen.params) == params_checksum(g2.params);
  tc.steps = 6;
  const TrainResult rest = stage1_pretrain(loaded.gen, loaded.bank, ds, tc, &loaded.state);
  ok = ok && params_checksum(loaded.gen.params) == params_checksum(g1.params);
  for (size_t i = 0; i < rest.log.size(); ++i)
    ok = ok && rest.log[i].j_gen == full.log[3 + i].j_gen;

  fs::remove_all(dir);
  detail = "MEL1 + weight store bit-exact, truncation -> integrity error, resume@3 == uninterrupted";
  return ok;
}

}  // namespace

int main(int argc, char** argv) {
  Ctx ctx;
  int only = 0;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--quick") == 0) {
      ctx.quick = true;
      ctx.stage1_steps = 60;
      ctx.stage2_steps = 60;
      ctx.teacher_steps = 30;
      ctx.ablation_steps = 10;
    } else if (std::strcmp(argv[i], "--only") == 0 && i + 1 < argc) {
      only = std::atoi(argv[++i]);
    }
  }

  struct Criterion {
    int id;
    const char* name;
    std::function<bool(Ctx&, std::string&)> fn;
  };
  const std::vector<Criterion> criteria = {
      {1, "delay arithmetic", c1_delay},
      {2, "causality suite", c2_causality},
      {3, "stream/offline equivalence", c3_stream_offline},
      {4, "gradient suite", c4_gradients},
      {5, "loss identities", c5_loss_identities},
      {6, "toy stage 1", c6_stage1},
      {7, "toy stage 2", c7_stage2},
      {8, "ablation reachability", c8_ablations},
      {9, "metrics", c9_metrics},
      {10, "format round trips", c10_formats},
  };

  bool all_ok = true;
  for (const auto& c : criteria) {
    if (only && c.id != only) continue;
    const auto t0 = std::chrono::steady_clock::now();
    std::string detail;
    bool ok = false;
    try {
      ok = c.fn(ctx, detail);
    } catch (const std::exception& e) {
      detail = std::string("exception: ") + e.what();
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("CRITERION %2d %s  %-28s [%7.1fs]  %s\n", c.id, ok ? "PASS" : "FAIL", c.name,
                secs, detail.c_str());
    std::fflush(stdout);
    all_ok = all_ok && ok;
  }
  return all_ok ? 0 : 1;
}
