// lowvoc: command-line front end over the vocoder engine.
// Subcommands: mel, synth, train, finetune, eval, delay, gradcheck.
// Errors leave as one-line JSON on stderr with a distinct exit code.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "lowvoc/audio_io.hpp"
#include "lowvoc/config_json.hpp"
#include "lowvoc/error.hpp"
#include "lowvoc/gradsuite.hpp"
#include "lowvoc/metrics.hpp"
#include "lowvoc/stream.hpp"
#include "lowvoc/trainer.hpp"

namespace {

using namespace lowvoc;

struct AppConfig {
  FrontendConfig frontend;
  GeneratorConfig generator;
  DiscriminatorBankConfig discriminators;
  nlohmann::json train_json = nlohmann::json::object();
  int ssl_width = 64;
  uint64_t ssl_seed = 0x55170;
  std::string ssl_weights;
  int toy_utterances = 10;
  double toy_duration_s = 1.0;
  uint64_t toy_seed = 7;
};

AppConfig load_app_config(const std::string& path) {
  AppConfig c;
  if (path.empty()) return c;
  std::ifstream is(path);
  require(static_cast<bool>(is), ErrorCode::io, "cannot open config: " + path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(is);
  } catch (const std::exception& e) {
    fail(ErrorCode::invalid_config, std::string("config is not valid JSON: ") + e.what());
  }
  if (j.contains("frontend")) c.frontend = frontend_from_json(j.at("frontend"));
  if (j.contains("generator")) c.generator = generator_from_json(j.at("generator"));
  if (j.contains("discriminators"))
    c.discriminators = discriminators_from_json(j.at("discriminators"));
  if (j.contains("train")) c.train_json = j.at("train");
  if (j.contains("ssl")) {
    c.ssl_width = j.at("ssl").value("width", c.ssl_width);
    c.ssl_seed = j.at("ssl").value("seed", c.ssl_seed);
    c.ssl_weights = j.at("ssl").value("weights", c.ssl_weights);
  }
  if (j.contains("toy")) {
    c.toy_utterances = j.at("toy").value("utterances", c.toy_utterances);
    c.toy_duration_s = j.at("toy").value("duration_s", c.toy_duration_s);
    c.toy_seed = j.at("toy").value("seed", c.toy_seed);
  }
  return c;
}

SslEncoder<float> load_encoder(const AppConfig& c) {
  if (!c.ssl_weights.empty()) {
    const WeightStore ws = load_weight_store(c.ssl_weights);
    ParamSet<float> loaded;
    for (const auto& t : ws.tensors) {
      auto p = loaded.make(t.name, t.shape, false);
      p->value.v.assign(t.data.begin(), t.data.end());
    }
    const nlohmann::json meta = nlohmann::json::parse(ws.meta_json);
    return ssl_encoder_from_params<float>(meta.value("width", c.ssl_width), loaded);
  }
  return build_ssl_encoder<float>(c.ssl_seed, c.ssl_width);
}

Dataset<float> load_dataset(const AppConfig& c, const std::string& data_dir, bool toy) {
  if (toy) return make_toy_dataset<float>(c.toy_seed, c.toy_utterances, c.toy_duration_s,
                                          c.frontend.sample_rate_hz);
  require(!data_dir.empty(), ErrorCode::invalid_config, "need --toy or --data DIR");
  Dataset<float> ds;
  ds.sample_rate_hz = c.frontend.sample_rate_hz;
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(data_dir))
    if (e.path().extension() == ".wav") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  require(!files.empty(), ErrorCode::io, "no wav files in " + data_dir);
  for (const auto& f : files) {
    Waveform w = read_wav(f.string());
    require(w.sample_rate_hz == c.frontend.sample_rate_hz, ErrorCode::invalid_config,
            "sample rate mismatch in " + f.string());
    ds.utterances.push_back(std::move(w.samples));
  }
  return ds;
}

void write_log(const std::string& path, const TrainResult& result) {
  if (path.empty()) return;
  std::ofstream os(path);
  require(static_cast<bool>(os), ErrorCode::io, "cannot open log for writing: " + path);
  for (const auto& r : result.log) os << loss_report_json_line(r) << "\n";
}

int cmd_mel(const std::string& in, const std::string& out, const AppConfig& cfg) {
  Waveform w = read_wav(in);
  require(w.sample_rate_hz == cfg.frontend.sample_rate_hz, ErrorCode::invalid_config,
          "wav sample rate does not match config");
  // computed at 64 bit, stored as f32
  std::vector<double> wave(w.samples.begin(), w.samples.end());
  const Tensor<double> mel = wav2mel(wave, cfg.frontend);
  write_mel(out, mel.cast<float>());
  return 0;
}

int cmd_synth(const std::string& in, const std::string& ckpt, const std::string& out,
              bool stream, bool instrument) {
  LoadedCheckpoint<float> ck = load_checkpoint<float>(ckpt);
  if (stream && in == "-") {
    // stdin MEL1 -> raw PCM16 on stdout, flushed per frame
    StreamSession<float> sess(ck.gen);
    MelStreamReader reader(std::cin);
    require(reader.bands() == ck.gen.cfg.mel_bands, ErrorCode::shape_mismatch,
            "mel band count does not match checkpoint");
    std::vector<float> frame;
    int64_t peak_buffered_frames = 0;
    while (reader.next_frame(frame)) {
      peak_buffered_frames = std::max<int64_t>(peak_buffered_frames, 1);
      const std::vector<float> samples = sess.push_mel_frame(frame);
      const std::vector<int16_t> pcm = quantize_pcm16(samples);
      std::fwrite(pcm.data(), sizeof(int16_t), pcm.size(), stdout);
      std::fflush(stdout);
    }
    if (instrument)
      std::cerr << nlohmann::json({{"peak_buffered_frames", peak_buffered_frames},
                                   {"window_ms", 1000.0 * ck.frontend.window_len /
                                                     ck.frontend.sample_rate_hz}})
                       .dump()
                << "\n";
    return 0;
  }
  const Tensor<float> mel = read_mel(in);
  require(mel.shape[1] == ck.gen.cfg.mel_bands, ErrorCode::shape_mismatch,
          "mel band count does not match checkpoint");
  Waveform w;
  w.sample_rate_hz = ck.frontend.sample_rate_hz;
  if (stream) {
    StreamSession<float> sess(ck.gen);
    std::vector<float> frame(static_cast<size_t>(mel.shape[1]));
    int64_t peak_buffered_frames = 0;
    for (int64_t t = 0; t < mel.shape[0]; ++t) {
      std::copy(mel.data() + t * mel.shape[1], mel.data() + (t + 1) * mel.shape[1], frame.begin());
      peak_buffered_frames = std::max<int64_t>(peak_buffered_frames, 1);
      const std::vector<float> samples = sess.push_mel_frame(frame);
      w.samples.insert(w.samples.end(), samples.begin(), samples.end());
    }
    if (instrument)
      std::cerr << nlohmann::json({{"peak_buffered_frames", peak_buffered_frames}}).dump() << "\n";
  } else {
    w.samples = generator_forward(ck.gen, mel);
  }
  write_wav(out, w);
  return 0;
}

int cmd_train(const AppConfig& cfg, const std::string& data_dir, bool toy, bool teacher,
              const std::string& out, const std::string& log_path, const std::string& resume,
              uint64_t seed_override, bool have_seed) {
  TrainConfig tc = train_from_json(cfg.train_json, cfg.frontend);
  if (have_seed) tc.seed = seed_override;
  GeneratorConfig gc = cfg.generator;
  gc.causal = !teacher;
  const Dataset<float> ds = load_dataset(cfg, data_dir, toy);

  Generator<float> gen = build_generator<float>(gc, tc.seed + 1);
  DiscriminatorBank<float> bank =
      build_discriminator_bank<float>(cfg.discriminators, tc.seed + 2, teacher ? "td" : "sd");
  TrainerState<float> state;
  if (!resume.empty()) {
    LoadedCheckpoint<float> ck = load_checkpoint<float>(resume);
    gen = std::move(ck.gen);
    bank = std::move(ck.bank);
    state = std::move(ck.state);
  }
  const TrainResult result = teacher ? train_teacher(gen, bank, ds, tc, &state)
                                     : stage1_pretrain(gen, bank, ds, tc, &state);
  save_checkpoint(out, gen, bank, state, tc);
  write_log(log_path, result);
  if (!result.log.empty()) {
    const auto& last = result.log.back();
    std::cout << "trained " << stage_name(tc.stage) << (teacher ? " (teacher)" : "") << " to step "
              << last.step << ", j_mel " << last.j_mel << ", j_gen " << last.j_gen << "\n";
  }
  return 0;
}

int cmd_finetune(const AppConfig& cfg, const std::string& student_path,
                 const std::string& teacher_path, const std::string& data_dir, bool toy,
                 const std::string& out, const std::string& log_path, uint64_t seed_override,
                 bool have_seed) {
  TrainConfig tc = train_from_json(cfg.train_json, cfg.frontend);
  tc.stage = Stage::finetune;
  if (!cfg.train_json.contains("learning_rate")) tc.learning_rate = 3e-4;
  if (have_seed) tc.seed = seed_override;

  LoadedCheckpoint<float> student = load_checkpoint<float>(student_path);
  LoadedCheckpoint<float> teacher = load_checkpoint<float>(teacher_path);
  require(student.gen.cfg.causal, ErrorCode::invalid_config, "student checkpoint must be causal");
  require(!teacher.gen.cfg.causal, ErrorCode::invalid_config,
          "teacher checkpoint must be non-causal");
  teacher.gen.params.set_requires_grad(false);
  teacher.bank.params.set_requires_grad(false);

  const SslEncoder<float> enc = load_encoder(cfg);
  const Dataset<float> ds = load_dataset(cfg, data_dir, toy);
  TrainerState<float> state;  // fine-tuning starts a fresh optimizer
  const TrainResult result = stage2_finetune(student.gen, student.bank, teacher.gen, teacher.bank,
                                             enc, ds, tc, &state);
  save_checkpoint(out, student.gen, student.bank, state, tc);
  write_log(log_path, result);
  if (!result.log.empty()) {
    const auto& last = result.log.back();
    std::cout << "fine-tuned to step " << last.step << ", j_fm_t " << last.j_fm_t << ", j_ssl "
              << last.j_ssl << "\n";
  }
  return 0;
}

int cmd_eval(const std::string& ref, const std::string& hyp, const std::string& out,
             const std::string& ckpt, const AppConfig& cfg) {
  Waveform a = read_wav(ref);
  Waveform b = read_wav(hyp);
  require(a.sample_rate_hz == b.sample_rate_hz, ErrorCode::invalid_config,
          "sample rates differ between ref and hyp");
  FrontendConfig fc = cfg.frontend;
  require(a.sample_rate_hz == fc.sample_rate_hz, ErrorCode::invalid_config,
          "wav sample rate does not match config");
  const McdConfig mc;
  const McdResult m = mcd(a.samples, b.samples, fc, mc);
  nlohmann::json j;
  j["mcd_db"] = m.db;
  j["mcd_frames"] = m.frames;
  j["mcd_truncated"] = m.truncated;
  j["mcd_conventions"] = {{"order", mc.order},
                          {"include_c0", mc.include_c0},
                          {"dct", "orthonormal type-II"},
                          {"alignment", "frame index, no DTW"}};
  j["mel_l1"] = mel_l1_metric(a.samples, b.samples, fc);
  if (!ckpt.empty()) {
    LoadedCheckpoint<float> ck = load_checkpoint<float>(ckpt);
    j["flops_g"] = count_flops(ck.gen.cfg, ck.frontend.sample_rate_hz).gflops();
    j["params"] = ck.gen.params.count();
  }
  std::ofstream os(out);
  require(static_cast<bool>(os), ErrorCode::io, "cannot open for writing: " + out);
  os << j.dump(2) << "\n";
  std::cout << j.dump() << "\n";
  return 0;
}

int cmd_delay(const std::string& ckpt) {
  LoadedCheckpoint<float> ck = load_checkpoint<float>(ckpt);
  std::printf("%.1f\n", algorithmic_delay_ms(ck.gen, ck.frontend));
  return 0;
}

int cmd_gradcheck(uint64_t seed, bool thorough) {
  const GradSuiteResult res = run_grad_suite(seed, thorough);
  bool ok = true;
  for (const auto& e : res.entries) {
    const bool pass = e.max_rel_err < 1e-4;
    ok = ok && pass;
    std::printf("%-28s max_rel_err %.3e over %lld samples  %s\n", e.name.c_str(), e.max_rel_err,
                static_cast<long long>(e.samples), pass ? "ok" : "FAIL");
  }
  std::printf("gradcheck %s (worst %.3e)\n", ok ? "passed" : "FAILED", res.worst());
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"lowvoc: streaming low-latency GAN vocoder engine"};
  app.require_subcommand(1);

  std::string config_path, in_path, out_path, ckpt_path, data_dir, log_path, resume_path;
  std::string student_path, teacher_path, ref_path, hyp_path;
  bool stream = false, instrument = false, toy = false, teacher = false, quick = false;
  uint64_t seed = 0;
  bool have_seed = false;

  auto add_seed = [&](CLI::App* c) {
    c->add_option("--seed", seed, "override the configured seed")->each([&](const std::string&) {
      have_seed = true;
    });
  };

  auto* mel = app.add_subcommand("mel", "extract a MEL1 spectrogram from a wav");
  mel->add_option("--in", in_path, "input wav (PCM16 mono)")->required();
  mel->add_option("--out", out_path, "output MEL1 file")->required();
  mel->add_option("--config", config_path, "JSON config");

  auto* synth = app.add_subcommand("synth", "synthesize a wav from a MEL1 file");
  synth->add_option("--in", in_path, "input MEL1 file, or '-' for stdin with --stream")->required();
  synth->add_option("--ckpt", ckpt_path, "generator checkpoint")->required();
  synth->add_option("--out", out_path, "output wav");
  synth->add_flag("--stream", stream, "frame-by-frame streaming synthesis");
  synth->add_flag("--offline", [](std::int64_t) {}, "offline synthesis (default)");
  synth->add_flag("--instrument", instrument, "report peak buffered input");

  auto* train = app.add_subcommand("train", "stage-1 pre-training (or teacher with --teacher)");
  train->add_option("--config", config_path, "JSON config");
  train->add_option("--data", data_dir, "directory of wav files");
  train->add_flag("--toy", toy, "use the synthetic toy corpus");
  train->add_flag("--teacher", teacher, "train the non-causal teacher");
  train->add_option("--out", out_path, "output checkpoint")->required();
  train->add_option("--log", log_path, "JSON-lines loss log");
  train->add_option("--resume", resume_path, "resume from checkpoint");
  add_seed(train);

  auto* finetune = app.add_subcommand("finetune", "stage-2 fine-tuning with teacher + SSL");
  finetune->add_option("--config", config_path, "JSON config");
  finetune->add_option("--student", student_path, "stage-1 student checkpoint")->required();
  finetune->add_option("--teacher", teacher_path, "teacher checkpoint")->required();
  finetune->add_option("--data", data_dir, "directory of wav files");
  finetune->add_flag("--toy", toy, "use the synthetic toy corpus");
  finetune->add_option("--out", out_path, "output checkpoint")->required();
  finetune->add_option("--log", log_path, "JSON-lines loss log");
  add_seed(finetune);

  auto* eval = app.add_subcommand("eval", "MCD / mel-L1 between two wavs");
  eval->add_option("--ref", ref_path, "reference wav")->required();
  eval->add_option("--hyp", hyp_path, "hypothesis wav")->required();
  eval->add_option("--out", out_path, "output JSON")->required();
  eval->add_option("--ckpt", ckpt_path, "checkpoint for FLOPs / param counts");
  eval->add_option("--config", config_path, "JSON config");

  auto* delay = app.add_subcommand("delay", "print the algorithmic delay in ms");
  delay->add_option("--ckpt", ckpt_path, "checkpoint")->required();

  auto* gradcheck = app.add_subcommand("gradcheck", "run the gradient check suite");
  gradcheck->add_flag("--quick", quick, "fewer random shapes per op");
  add_seed(gradcheck);

  CLI11_PARSE(app, argc, argv);

  try {
    const AppConfig cfg = load_app_config(config_path);
    if (mel->parsed()) return cmd_mel(in_path, out_path, cfg);
    if (synth->parsed()) {
      require(!out_path.empty() || (stream && in_path == "-"), ErrorCode::invalid_config,
              "--out is required unless streaming from stdin");
      return cmd_synth(in_path, ckpt_path, out_path, stream, instrument);
    }
    if (train->parsed())
      return cmd_train(cfg, data_dir, toy, teacher, out_path, log_path, resume_path, seed,
                       have_seed);
    if (finetune->parsed())
      return cmd_finetune(cfg, student_path, teacher_path, data_dir, toy, out_path, log_path,
                          seed, have_seed);
    if (eval->parsed()) return cmd_eval(ref_path, hyp_path, out_path, ckpt_path, cfg);
    if (delay->parsed()) return cmd_delay(ckpt_path);
    if (gradcheck->parsed()) return cmd_gradcheck(have_seed ? seed : 20240101, !quick);
  } catch (const Error& e) {
    nlohmann::json j{{"error", error_code_name(e.code())}, {"message", e.what()}};
    std::cerr << j.dump() << "\n";
    return static_cast<int>(e.code());
  } catch (const std::exception& e) {
    nlohmann::json j{{"error", "internal"}, {"message", e.what()}};
    std::cerr << j.dump() << "\n";
    return static_cast<int>(ErrorCode::internal);
  }
  return 0;
}
