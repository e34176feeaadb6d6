#include "lowvoc/weightstore.hpp"

#include <cstring>
#include <fstream>

#include "json.hpp"

namespace lowvoc {

namespace {

constexpr char kMagic[4] = {'L', 'V', 'W', 'S'};
constexpr uint32_t kVersion = 1;

void write_u32(std::ostream& os, uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                        static_cast<unsigned char>((v >> 8) & 0xff),
                        static_cast<unsigned char>((v >> 16) & 0xff),
                        static_cast<unsigned char>((v >> 24) & 0xff)};
  os.write(reinterpret_cast<const char*>(b), 4);
}

uint32_t read_u32(std::istream& is) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  require(static_cast<bool>(is), ErrorCode::integrity, "weight store truncated");
  return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
         (static_cast<uint32_t>(b[2]) << 16) | (static_cast<uint32_t>(b[3]) << 24);
}

std::string hex64(uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i) {
    s[static_cast<size_t>(i)] = digits[v & 0xf];
    v >>= 4;
  }
  return s;
}

}  // namespace

uint64_t fnv1a(const unsigned char* data, size_t n, uint64_t seed) {
  uint64_t h = seed;
  for (size_t i = 0; i < n; ++i) h = (h ^ data[i]) * 1099511628211ull;
  return h;
}

void save_weight_store(const std::string& path, const WeightStore& ws) {
  nlohmann::json manifest;
  manifest["tensors"] = nlohmann::json::array();
  std::vector<float> blob;
  for (const auto& t : ws.tensors) {
    nlohmann::json jt;
    jt["name"] = t.name;
    jt["shape"] = t.shape;
    jt["offset"] = blob.size();
    jt["count"] = t.data.size();
    require(t.data.size() == static_cast<size_t>(Tensor<float>::count(t.shape)),
            ErrorCode::contract, "tensor data does not match its shape: " + t.name);
    manifest["tensors"].push_back(jt);
    blob.insert(blob.end(), t.data.begin(), t.data.end());
  }
  manifest["blob_count"] = blob.size();
  manifest["checksum"] =
      hex64(fnv1a(reinterpret_cast<const unsigned char*>(blob.data()), blob.size() * sizeof(float)));
  manifest["meta"] = nlohmann::json::parse(ws.meta_json.empty() ? "{}" : ws.meta_json);

  std::ofstream os(path, std::ios::binary);
  require(static_cast<bool>(os), ErrorCode::io, "cannot open for writing: " + path);
  os.write(kMagic, 4);
  write_u32(os, kVersion);
  const std::string mtext = manifest.dump();
  write_u32(os, static_cast<uint32_t>(mtext.size()));
  os.write(mtext.data(), static_cast<std::streamsize>(mtext.size()));
  os.write(reinterpret_cast<const char*>(blob.data()),
           static_cast<std::streamsize>(blob.size() * sizeof(float)));
  require(static_cast<bool>(os), ErrorCode::io, "write failed: " + path);
}

WeightStore load_weight_store(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  require(static_cast<bool>(is), ErrorCode::io, "cannot open: " + path);
  char magic[4];
  is.read(magic, 4);
  require(static_cast<bool>(is) && std::memcmp(magic, kMagic, 4) == 0, ErrorCode::integrity,
          "not a weight store file: " + path);
  const uint32_t version = read_u32(is);
  require(version == kVersion, ErrorCode::integrity, "unsupported weight store version");
  const uint32_t mlen = read_u32(is);
  std::string mtext(mlen, '\0');
  is.read(mtext.data(), mlen);
  require(static_cast<bool>(is), ErrorCode::integrity, "weight store manifest truncated");
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(mtext);
  } catch (const std::exception& e) {
    fail(ErrorCode::integrity, std::string("bad weight store manifest: ") + e.what());
  }

  const size_t blob_count = manifest.at("blob_count").get<size_t>();
  std::vector<float> blob(blob_count);
  is.read(reinterpret_cast<char*>(blob.data()),
          static_cast<std::streamsize>(blob_count * sizeof(float)));
  require(static_cast<bool>(is), ErrorCode::integrity, "weight store blob truncated");
  const std::string expect = manifest.at("checksum").get<std::string>();
  const std::string actual = hex64(
      fnv1a(reinterpret_cast<const unsigned char*>(blob.data()), blob.size() * sizeof(float)));
  require(expect == actual, ErrorCode::integrity, "weight store checksum mismatch");

  WeightStore ws;
  ws.meta_json = manifest.value("meta", nlohmann::json::object()).dump();
  for (const auto& jt : manifest.at("tensors")) {
    StoredTensor t;
    t.name = jt.at("name").get<std::string>();
    t.shape = jt.at("shape").get<std::vector<int64_t>>();
    const size_t offset = jt.at("offset").get<size_t>();
    const size_t count = jt.at("count").get<size_t>();
    require(offset + count <= blob.size(), ErrorCode::integrity,
            "tensor range out of blob bounds: " + t.name);
    require(count == static_cast<size_t>(Tensor<float>::count(t.shape)), ErrorCode::integrity,
            "tensor count does not match shape: " + t.name);
    t.data.assign(blob.begin() + static_cast<std::ptrdiff_t>(offset),
                  blob.begin() + static_cast<std::ptrdiff_t>(offset + count));
    ws.tensors.push_back(std::move(t));
  }
  return ws;
}

}  // namespace lowvoc
