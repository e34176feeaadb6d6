#include "lowvoc/audio_io.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "lowvoc/error.hpp"

namespace lowvoc {

namespace {

void put_u16(std::ostream& os, uint16_t v) {
  unsigned char b[2] = {static_cast<unsigned char>(v & 0xff),
                        static_cast<unsigned char>(v >> 8)};
  os.write(reinterpret_cast<const char*>(b), 2);
}

void put_u32(std::ostream& os, uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                        static_cast<unsigned char>((v >> 8) & 0xff),
                        static_cast<unsigned char>((v >> 16) & 0xff),
                        static_cast<unsigned char>((v >> 24) & 0xff)};
  os.write(reinterpret_cast<const char*>(b), 4);
}

uint16_t get_u16(std::istream& is) {
  unsigned char b[2];
  is.read(reinterpret_cast<char*>(b), 2);
  require(static_cast<bool>(is), ErrorCode::io, "unexpected end of file");
  return static_cast<uint16_t>(b[0] | (b[1] << 8));
}

uint32_t get_u32(std::istream& is) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  require(static_cast<bool>(is), ErrorCode::io, "unexpected end of file");
  return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
         (static_cast<uint32_t>(b[2]) << 16) | (static_cast<uint32_t>(b[3]) << 24);
}

}  // namespace

int16_t quantize_pcm16(float x) {
  const double scaled = static_cast<double>(x) * 32767.0;
  double r = std::nearbyint(scaled);  // FE_TONEAREST: round half to even
  if (r > 32767.0) r = 32767.0;
  if (r < -32768.0) r = -32768.0;
  return static_cast<int16_t>(r);
}

std::vector<int16_t> quantize_pcm16(const std::vector<float>& x) {
  std::vector<int16_t> out(x.size());
  for (size_t i = 0; i < x.size(); ++i) out[i] = quantize_pcm16(x[i]);
  return out;
}

Waveform read_wav(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  require(static_cast<bool>(is), ErrorCode::io, "cannot open: " + path);
  char tag[4];
  is.read(tag, 4);
  require(static_cast<bool>(is) && std::memcmp(tag, "RIFF", 4) == 0, ErrorCode::io,
          "not a RIFF file: " + path);
  get_u32(is);  // riff size
  is.read(tag, 4);
  require(static_cast<bool>(is) && std::memcmp(tag, "WAVE", 4) == 0, ErrorCode::io,
          "not a WAVE file: " + path);

  Waveform w;
  bool have_fmt = false;
  uint16_t channels = 0, bits = 0, format = 0;
  while (is.read(tag, 4)) {
    const uint32_t chunk_size = get_u32(is);
    if (std::memcmp(tag, "fmt ", 4) == 0) {
      format = get_u16(is);
      channels = get_u16(is);
      w.sample_rate_hz = static_cast<int>(get_u32(is));
      get_u32(is);  // byte rate
      get_u16(is);  // block align
      bits = get_u16(is);
      if (chunk_size > 16) is.seekg(chunk_size - 16, std::ios::cur);
      have_fmt = true;
    } else if (std::memcmp(tag, "data", 4) == 0) {
      require(have_fmt, ErrorCode::io, "wav data before fmt chunk");
      require(format == 1, ErrorCode::io, "wav must be integer PCM");
      require(channels == 1, ErrorCode::io, "wav must be mono");
      require(bits == 16, ErrorCode::io, "wav must be 16-bit");
      const size_t n = chunk_size / 2;
      std::vector<int16_t> raw(n);
      is.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(chunk_size));
      require(static_cast<bool>(is), ErrorCode::io, "wav data truncated");
      w.samples.resize(n);
      for (size_t i = 0; i < n; ++i)
        w.samples[i] = static_cast<float>(raw[i]) / 32767.0f;
      return w;
    } else {
      is.seekg(chunk_size + (chunk_size & 1), std::ios::cur);
    }
  }
  fail(ErrorCode::io, "wav file has no data chunk: " + path);
}

void write_wav(const std::string& path, const Waveform& w) {
  std::ofstream os(path, std::ios::binary);
  require(static_cast<bool>(os), ErrorCode::io, "cannot open for writing: " + path);
  const std::vector<int16_t> pcm = quantize_pcm16(w.samples);
  const uint32_t data_bytes = static_cast<uint32_t>(pcm.size() * 2);
  os.write("RIFF", 4);
  put_u32(os, 36 + data_bytes);
  os.write("WAVE", 4);
  os.write("fmt ", 4);
  put_u32(os, 16);
  put_u16(os, 1);  // PCM
  put_u16(os, 1);  // mono
  put_u32(os, static_cast<uint32_t>(w.sample_rate_hz));
  put_u32(os, static_cast<uint32_t>(w.sample_rate_hz * 2));
  put_u16(os, 2);
  put_u16(os, 16);
  os.write("data", 4);
  put_u32(os, data_bytes);
  os.write(reinterpret_cast<const char*>(pcm.data()), data_bytes);
  require(static_cast<bool>(os), ErrorCode::io, "wav write failed: " + path);
}

void write_mel_stream(std::ostream& os, const Tensor<float>& mel) {
  require(mel.rank() == 2, ErrorCode::shape_mismatch, "mel must be [T, M]");
  os.write("MEL1", 4);
  put_u32(os, static_cast<uint32_t>(mel.shape[0]));
  put_u32(os, static_cast<uint32_t>(mel.shape[1]));
  os.write(reinterpret_cast<const char*>(mel.data()),
           static_cast<std::streamsize>(mel.v.size() * sizeof(float)));
}

void write_mel(const std::string& path, const Tensor<float>& mel) {
  std::ofstream os(path, std::ios::binary);
  require(static_cast<bool>(os), ErrorCode::io, "cannot open for writing: " + path);
  write_mel_stream(os, mel);
  require(static_cast<bool>(os), ErrorCode::io, "mel write failed: " + path);
}

Tensor<float> read_mel(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  require(static_cast<bool>(is), ErrorCode::io, "cannot open: " + path);
  char magic[4];
  is.read(magic, 4);
  require(static_cast<bool>(is) && std::memcmp(magic, "MEL1", 4) == 0, ErrorCode::io,
          "not a MEL1 file: " + path);
  const uint32_t t = get_u32(is);
  const uint32_t m = get_u32(is);
  Tensor<float> mel({static_cast<int64_t>(t), static_cast<int64_t>(m)});
  is.read(reinterpret_cast<char*>(mel.data()),
          static_cast<std::streamsize>(mel.v.size() * sizeof(float)));
  require(static_cast<bool>(is), ErrorCode::io, "mel data truncated: " + path);
  return mel;
}

MelStreamReader::MelStreamReader(std::istream& is) : is_(is) {
  char magic[4];
  is_.read(magic, 4);
  require(static_cast<bool>(is_) && std::memcmp(magic, "MEL1", 4) == 0, ErrorCode::io,
          "stream is not MEL1");
  frames_ = get_u32(is_);
  bands_ = get_u32(is_);
}

bool MelStreamReader::next_frame(std::vector<float>& out) {
  if (read_ >= frames_) return false;
  out.resize(static_cast<size_t>(bands_));
  is_.read(reinterpret_cast<char*>(out.data()),
           static_cast<std::streamsize>(out.size() * sizeof(float)));
  require(static_cast<bool>(is_), ErrorCode::io, "mel stream truncated");
  ++read_;
  return true;
}

}  // namespace lowvoc
