#ifndef LOWVOC_TENSOR_HPP
#define LOWVOC_TENSOR_HPP

#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "lowvoc/error.hpp"

namespace lowvoc {

// Dense row-major tensor. Rank is dynamic; most of the engine uses
// [C, L] for 1-D feature maps and [C, H, W] for 2-D ones.
template <class S>
struct Tensor {
  std::vector<int64_t> shape;
  std::vector<S> v;

  Tensor() = default;
  explicit Tensor(std::vector<int64_t> sh) : shape(std::move(sh)) {
    v.assign(static_cast<size_t>(count(shape)), S(0));
  }
  Tensor(std::vector<int64_t> sh, std::vector<S> data)
      : shape(std::move(sh)), v(std::move(data)) {
    require(static_cast<int64_t>(v.size()) == count(shape), ErrorCode::shape_mismatch,
            "tensor data size does not match shape");
  }

  static int64_t count(const std::vector<int64_t>& sh) {
    int64_t n = 1;
    for (int64_t d : sh) n *= d;
    return n;
  }

  int64_t numel() const { return static_cast<int64_t>(v.size()); }
  int rank() const { return static_cast<int>(shape.size()); }
  int64_t dim(int i) const { return shape[static_cast<size_t>(i)]; }

  S* data() { return v.data(); }
  const S* data() const { return v.data(); }

  bool same_shape(const Tensor& o) const { return shape == o.shape; }

  bool all_finite() const {
    for (S x : v)
      if (!std::isfinite(static_cast<double>(x))) return false;
    return true;
  }

  void fill(S x) { std::fill(v.begin(), v.end(), x); }

  template <class T>
  Tensor<T> cast() const {
    Tensor<T> out;
    out.shape = shape;
    out.v.resize(v.size());
    for (size_t i = 0; i < v.size(); ++i) out.v[i] = static_cast<T>(v[i]);
    return out;
  }
};

inline std::string shape_str(const std::vector<int64_t>& sh) {
  std::string s = "[";
  for (size_t i = 0; i < sh.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(sh[i]);
  }
  return s + "]";
}

}  // namespace lowvoc

#endif  // LOWVOC_TENSOR_HPP
