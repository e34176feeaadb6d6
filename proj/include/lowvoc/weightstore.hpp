#ifndef LOWVOC_WEIGHTSTORE_HPP
#define LOWVOC_WEIGHTSTORE_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "lowvoc/error.hpp"
#include "lowvoc/graph.hpp"
#include "lowvoc/tensor.hpp"

namespace lowvoc {

// On-disk parameter container: "LVWS" magic, version, JSON manifest
// (name -> shape/offset plus free-form meta), then a raw little-endian f32
// blob. The manifest carries an FNV-1a checksum of the blob; load verifies
// it, so truncation or corruption surfaces as an integrity error.
struct StoredTensor {
  std::string name;
  std::vector<int64_t> shape;
  std::vector<float> data;
};

struct WeightStore {
  std::vector<StoredTensor> tensors;
  std::string meta_json = "{}";

  const StoredTensor* find(const std::string& name) const {
    for (const auto& t : tensors)
      if (t.name == name) return &t;
    return nullptr;
  }
};

void save_weight_store(const std::string& path, const WeightStore& ws);
WeightStore load_weight_store(const std::string& path);

uint64_t fnv1a(const unsigned char* data, size_t n, uint64_t seed = 1469598103934665603ull);

template <class S>
void pack_params(WeightStore& ws, const ParamSet<S>& ps) {
  for (const auto& p : ps.items) {
    StoredTensor t;
    t.name = p->name;
    t.shape = p->value.shape;
    t.data.resize(p->value.v.size());
    for (size_t i = 0; i < t.data.size(); ++i) t.data[i] = static_cast<float>(p->value.v[i]);
    ws.tensors.push_back(std::move(t));
  }
}

// Fills an existing (structurally built) ParamSet by name.
template <class S>
void unpack_params(const WeightStore& ws, ParamSet<S>& ps) {
  for (auto& p : ps.items) {
    const StoredTensor* t = ws.find(p->name);
    require(t != nullptr, ErrorCode::integrity, "weight store missing tensor " + p->name);
    require(t->shape == p->value.shape, ErrorCode::integrity,
            "weight store shape mismatch for " + p->name);
    for (size_t i = 0; i < t->data.size(); ++i) p->value.v[i] = static_cast<S>(t->data[i]);
  }
}

}  // namespace lowvoc

#endif  // LOWVOC_WEIGHTSTORE_HPP
