#ifndef LOWVOC_CONFIG_JSON_HPP
#define LOWVOC_CONFIG_JSON_HPP

#include <string>

#include "json.hpp"
#include "lowvoc/discriminator.hpp"
#include "lowvoc/error.hpp"
#include "lowvoc/frontend.hpp"
#include "lowvoc/generator.hpp"
#include "lowvoc/losses.hpp"

namespace lowvoc {

// JSON <-> config structs. Parsing is strict about types and value ranges
// (validate() runs on every parse) but fields are individually optional so
// config files only state what they change.

inline nlohmann::json to_json(const FrontendConfig& c) {
  return {{"sample_rate_hz", c.sample_rate_hz}, {"window_len", c.window_len},
          {"frame_shift", c.frame_shift},       {"dft_size", c.dft_size},
          {"mel_bands", c.mel_bands},           {"fmin_hz", c.fmin_hz},
          {"fmax_hz", c.fmax_hz},               {"log_floor", c.log_floor}};
}

inline FrontendConfig frontend_from_json(const nlohmann::json& j) {
  FrontendConfig c;
  c.sample_rate_hz = j.value("sample_rate_hz", c.sample_rate_hz);
  c.window_len = j.value("window_len", c.window_len);
  c.frame_shift = j.value("frame_shift", c.frame_shift);
  c.dft_size = j.value("dft_size", c.dft_size);
  c.mel_bands = j.value("mel_bands", c.mel_bands);
  c.fmin_hz = j.value("fmin_hz", c.fmin_hz);
  c.fmax_hz = j.value("fmax_hz", c.fmax_hz);
  c.log_floor = j.value("log_floor", c.log_floor);
  validate(c);
  return c;
}

inline nlohmann::json to_json(const GeneratorConfig& c) {
  nlohmann::json j;
  j["stride_setup"] = c.stride_setup;
  j["causal"] = c.causal;
  j["base_channels"] = c.base_channels;
  if (!c.kernel_sizes.empty()) j["kernel_sizes"] = c.kernel_sizes;
  j["resblock_dilations"] = c.resblock_dilations;
  j["mel_bands"] = c.mel_bands;
  j["frame_shift"] = c.frame_shift;
  j["io_kernel"] = c.io_kernel;
  return j;
}

inline GeneratorConfig generator_from_json(const nlohmann::json& j) {
  GeneratorConfig c;
  c.stride_setup = j.value("stride_setup", c.stride_setup);
  c.causal = j.value("causal", c.causal);
  c.base_channels = j.value("base_channels", c.base_channels);
  c.kernel_sizes = j.value("kernel_sizes", c.kernel_sizes);
  c.resblock_dilations = j.value("resblock_dilations", c.resblock_dilations);
  c.mel_bands = j.value("mel_bands", c.mel_bands);
  c.frame_shift = j.value("frame_shift", c.frame_shift);
  c.io_kernel = j.value("io_kernel", c.io_kernel);
  validate(c);
  return c;
}

inline nlohmann::json to_json(const DiscriminatorBankConfig& c) {
  nlohmann::json res = nlohmann::json::array();
  for (const auto& r : c.resolutions) res.push_back({r.dft_size, r.shift, r.window});
  return {{"periods", c.periods},
          {"resolutions", res},
          {"mpd_channels", c.mpd_channels},
          {"mrd_channels", c.mrd_channels},
          {"leaky_slope", c.leaky_slope}};
}

inline DiscriminatorBankConfig discriminators_from_json(const nlohmann::json& j) {
  DiscriminatorBankConfig c;
  c.periods = j.value("periods", c.periods);
  if (j.contains("resolutions")) {
    c.resolutions.clear();
    for (const auto& r : j.at("resolutions")) {
      require(r.is_array() && r.size() == 3, ErrorCode::invalid_config,
              "resolution entries are [dft_size, shift, window]");
      c.resolutions.push_back({r[0].get<int>(), r[1].get<int>(), r[2].get<int>()});
    }
  }
  c.mpd_channels = j.value("mpd_channels", c.mpd_channels);
  c.mrd_channels = j.value("mrd_channels", c.mrd_channels);
  c.leaky_slope = j.value("leaky_slope", c.leaky_slope);
  validate(c);
  return c;
}

inline nlohmann::json to_json(const LossWeights& w) {
  return {{"lambda_mel", w.lambda_mel}, {"lambda_fm", w.lambda_fm}, {"lambda_ssl", w.lambda_ssl}};
}

inline LossWeights loss_weights_from_json(const nlohmann::json& j) {
  LossWeights w;
  w.lambda_mel = j.value("lambda_mel", w.lambda_mel);
  w.lambda_fm = j.value("lambda_fm", w.lambda_fm);
  w.lambda_ssl = j.value("lambda_ssl", w.lambda_ssl);
  validate(w);
  return w;
}

inline const char* ssl_variant_name(SslVariant v) {
  switch (v) {
    case SslVariant::cosine: return "cosine";
    case SslVariant::mse: return "mse";
    case SslVariant::mae: return "mae";
  }
  return "cosine";
}

inline SslVariant ssl_variant_from_name(const std::string& s) {
  if (s == "cosine") return SslVariant::cosine;
  if (s == "mse") return SslVariant::mse;
  if (s == "mae") return SslVariant::mae;
  fail(ErrorCode::invalid_config, "unknown ssl variant: " + s);
}

}  // namespace lowvoc

#endif  // LOWVOC_CONFIG_JSON_HPP
