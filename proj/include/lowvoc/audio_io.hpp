#ifndef LOWVOC_AUDIO_IO_HPP
#define LOWVOC_AUDIO_IO_HPP

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "lowvoc/tensor.hpp"

namespace lowvoc {

struct Waveform {
  std::vector<float> samples;
  int sample_rate_hz = 16000;
};

// 16-bit PCM mono WAV only; anything else is an io error.
Waveform read_wav(const std::string& path);
void write_wav(const std::string& path, const Waveform& w);

// Round-half-to-even quantization to PCM16 (scale 32767, clamp).
int16_t quantize_pcm16(float x);
std::vector<int16_t> quantize_pcm16(const std::vector<float>& x);

// MEL1 container: magic "MEL1", LE u32 T, u32 M, then T*M LE f32, row-major.
void write_mel(const std::string& path, const Tensor<float>& mel);
Tensor<float> read_mel(const std::string& path);
void write_mel_stream(std::ostream& os, const Tensor<float>& mel);

// Incremental MEL1 reading for the streaming CLI path.
class MelStreamReader {
 public:
  explicit MelStreamReader(std::istream& is);
  int64_t frames() const { return frames_; }
  int64_t bands() const { return bands_; }
  // Returns false at end of the declared frame count.
  bool next_frame(std::vector<float>& out);

 private:
  std::istream& is_;
  int64_t frames_ = 0;
  int64_t bands_ = 0;
  int64_t read_ = 0;
};

}  // namespace lowvoc

#endif  // LOWVOC_AUDIO_IO_HPP
