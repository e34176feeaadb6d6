#ifndef LOWVOC_GRAPH_HPP
#define LOWVOC_GRAPH_HPP

#include <cmath>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "lowvoc/error.hpp"
#include "lowvoc/fft.hpp"
#include "lowvoc/frontend.hpp"
#include "lowvoc/kernels.hpp"
#include "lowvoc/rng.hpp"
#include "lowvoc/tensor.hpp"

namespace lowvoc {

// Named trainable (or frozen) tensor shared between graphs and checkpoints.
template <class S>
struct Parameter {
  std::string name;
  Tensor<S> value;
  Tensor<S> grad;
  bool requires_grad = true;

  Parameter(std::string n, std::vector<int64_t> shape, bool rg = true)
      : name(std::move(n)), value(shape), grad(std::move(shape)), requires_grad(rg) {}
};

template <class S>
using ParamPtr = std::shared_ptr<Parameter<S>>;

template <class S>
struct ParamSet {
  std::vector<ParamPtr<S>> items;

  ParamPtr<S> make(const std::string& name, std::vector<int64_t> shape, bool rg = true) {
    auto p = std::make_shared<Parameter<S>>(name, std::move(shape), rg);
    items.push_back(p);
    return p;
  }
  void append(const ParamSet& o) {
    items.insert(items.end(), o.items.begin(), o.items.end());
  }
  ParamPtr<S> find(const std::string& name) const {
    for (auto& p : items)
      if (p->name == name) return p;
    return nullptr;
  }
  int64_t count() const {
    int64_t n = 0;
    for (auto& p : items) n += p->value.numel();
    return n;
  }
  void zero_grads() {
    for (auto& p : items) p->grad.fill(S(0));
  }
  void set_requires_grad(bool rg) {
    for (auto& p : items) p->requires_grad = rg;
  }
};

namespace detail {
template <class S>
void init_normal(Rng& rng, Tensor<S>& t, double sigma) {
  for (auto& x : t.v) x = static_cast<S>(rng.normal(0.0, sigma));
}
}  // namespace detail

// FNV-1a over the raw value bytes; used by the frozen-teacher/encoder checks.
template <class S>
uint64_t params_checksum(const ParamSet<S>& ps) {
  uint64_t h = 1469598103934665603ull;
  for (auto& p : ps.items) {
    const unsigned char* bytes = reinterpret_cast<const unsigned char*>(p->value.data());
    size_t n = p->value.v.size() * sizeof(S);
    for (size_t i = 0; i < n; ++i) h = (h ^ bytes[i]) * 1099511628211ull;
  }
  return h;
}

struct GradCheckReport {
  double max_rel_err = 0.0;
  int64_t samples = 0;
  std::string worst;
};

// Reverse-mode autodiff over a static node list. Define the graph once, then
// set_input / forward / backward any number of times; shapes are fixed at
// construction. Evaluation order is the insertion order, which is topological
// by construction, and all reductions run in a fixed order, so results are
// deterministic and independent of how the caller interleaved construction.
template <class S>
class Graph {
 public:
  using NodeId = int;

  enum class Op {
    input, constant, param,
    conv1d, convt1d, conv2d,
    snake, leaky_relu, tanh_op, gelu,
    add, mul, scale, add_scalar,
    reshape, pad_last,
    mean, l1_mean, mse_mean, dot, l2_norm, matmul,
    log_op, clamp_min,
    stft_power, stft_mag,
    cosine_loss,
  };

  // ---- leaves ----

  NodeId input(Tensor<S> v, bool wants_grad = false) {
    Node n;
    n.op = Op::input;
    n.val = std::move(v);
    n.needs_grad = wants_grad;
    return push(std::move(n));
  }

  NodeId constant(Tensor<S> v) {
    Node n;
    n.op = Op::constant;
    n.val = std::move(v);
    return push(std::move(n));
  }

  // trainable=false keeps backward flowing *through* the parameter's op
  // without accumulating a weight gradient (frozen side of a GAN step).
  NodeId param(ParamPtr<S> p, bool trainable = true) {
    Node n;
    n.op = Op::param;
    n.val = p->value;
    n.needs_grad = p->requires_grad && trainable;
    n.p = p;
    params_.push_back(p);
    return push(std::move(n));
  }

  void set_input(NodeId id, const Tensor<S>& v) {
    Node& n = node(id);
    require(n.op == Op::input || n.op == Op::constant, ErrorCode::contract,
            "set_input target is not a leaf");
    require(n.val.shape == v.shape, ErrorCode::shape_mismatch,
            "set_input shape differs from graph shape");
    n.val.v = v.v;
  }

  // ---- ops ----

  NodeId conv1d(NodeId x, NodeId w, NodeId b, int stride, int dilation, Pad pad) {
    const auto& xs = node(x).val.shape;
    const auto& ws = node(w).val.shape;
    require(xs.size() == 2 && ws.size() == 3, ErrorCode::shape_mismatch, "conv1d wants x[C,L], w[Co,Ci,k]");
    require(xs[0] == ws[1], ErrorCode::shape_mismatch, "conv1d channel mismatch");
    require(stride >= 1 && dilation >= 1, ErrorCode::invalid_config, "conv1d stride/dilation >= 1");
    if (b >= 0)
      require(node(b).val.shape == std::vector<int64_t>{ws[0]}, ErrorCode::shape_mismatch,
              "conv1d bias shape");
    Node n;
    n.op = Op::conv1d;
    n.in = {x, w, b};
    n.stride = stride;
    n.dilation = dilation;
    n.pad = pad;
    n.val = Tensor<S>({ws[0], conv1d_out_len(xs[1], static_cast<int>(ws[2]), stride, dilation, pad)});
    return push(std::move(n));
  }

  NodeId conv_transpose1d(NodeId x, NodeId w, NodeId b, int stride, Pad pad) {
    const auto& xs = node(x).val.shape;
    const auto& ws = node(w).val.shape;
    require(xs.size() == 2 && ws.size() == 3, ErrorCode::shape_mismatch, "convt1d wants x[C,L], w[Co,Ci,k]");
    require(xs[0] == ws[1], ErrorCode::shape_mismatch, "convt1d channel mismatch");
    require(stride >= 1, ErrorCode::invalid_config, "convt1d stride >= 1");
    require(pad != Pad::valid, ErrorCode::invalid_config, "convt1d pad must be causal or same");
    if (b >= 0)
      require(node(b).val.shape == std::vector<int64_t>{ws[0]}, ErrorCode::shape_mismatch,
              "convt1d bias shape");
    Node n;
    n.op = Op::convt1d;
    n.in = {x, w, b};
    n.stride = stride;
    n.pad = pad;
    n.val = Tensor<S>({ws[0], xs[1] * stride});
    return push(std::move(n));
  }

  NodeId conv2d(NodeId x, NodeId w, NodeId b, int sh, int sw, int ph, int pw) {
    const auto& xs = node(x).val.shape;
    const auto& ws = node(w).val.shape;
    require(xs.size() == 3 && ws.size() == 4, ErrorCode::shape_mismatch,
            "conv2d wants x[C,H,W], w[Co,Ci,kh,kw]");
    require(xs[0] == ws[1], ErrorCode::shape_mismatch, "conv2d channel mismatch");
    if (b >= 0)
      require(node(b).val.shape == std::vector<int64_t>{ws[0]}, ErrorCode::shape_mismatch,
              "conv2d bias shape");
    Node n;
    n.op = Op::conv2d;
    n.in = {x, w, b};
    n.sh = sh;
    n.sw = sw;
    n.ph = ph;
    n.pw = pw;
    n.val = Tensor<S>({ws[0], conv2d_out_dim(xs[1], static_cast<int>(ws[2]), sh, ph),
                       conv2d_out_dim(xs[2], static_cast<int>(ws[3]), sw, pw)});
    return push(std::move(n));
  }

  // alpha: one entry per channel (first dimension of x).
  NodeId snake(NodeId x, NodeId alpha) {
    const auto& xs = node(x).val.shape;
    const auto& as = node(alpha).val.shape;
    require(!xs.empty() && as == std::vector<int64_t>{xs[0]}, ErrorCode::shape_mismatch,
            "snake alpha must have one entry per channel");
    for (S a : node(alpha).val.v)
      require(a > S(0), ErrorCode::invalid_config, "snake alpha must be positive");
    Node n;
    n.op = Op::snake;
    n.in = {x, alpha};
    n.val = Tensor<S>(xs);
    return push(std::move(n));
  }

  NodeId leaky_relu(NodeId x, S slope) {
    return unary(Op::leaky_relu, x, slope);
  }
  NodeId tanh(NodeId x) { return unary(Op::tanh_op, x, S(0)); }
  NodeId gelu(NodeId x) { return unary(Op::gelu, x, S(0)); }
  NodeId scale(NodeId x, S c) { return unary(Op::scale, x, c); }
  NodeId add_scalar(NodeId x, S c) { return unary(Op::add_scalar, x, c); }
  NodeId log(NodeId x) { return unary(Op::log_op, x, S(0)); }
  NodeId clamp_min(NodeId x, S c) { return unary(Op::clamp_min, x, c); }

  NodeId add(NodeId a, NodeId b) { return binary_same_shape(Op::add, a, b, node(a).val.shape); }
  NodeId mul(NodeId a, NodeId b) { return binary_same_shape(Op::mul, a, b, node(a).val.shape); }
  NodeId l1_mean(NodeId a, NodeId b) { return binary_same_shape(Op::l1_mean, a, b, {}); }
  NodeId mse_mean(NodeId a, NodeId b) { return binary_same_shape(Op::mse_mean, a, b, {}); }
  NodeId dot(NodeId a, NodeId b) { return binary_same_shape(Op::dot, a, b, {}); }

  NodeId l2_norm(NodeId x) {
    Node n;
    n.op = Op::l2_norm;
    n.in = {x};
    n.val = Tensor<S>(std::vector<int64_t>{});
    return push(std::move(n));
  }

  NodeId mean(NodeId x) {
    Node n;
    n.op = Op::mean;
    n.in = {x};
    n.val = Tensor<S>(std::vector<int64_t>{});
    return push(std::move(n));
  }

  NodeId matmul(NodeId a, NodeId b) {
    const auto& as = node(a).val.shape;
    const auto& bs = node(b).val.shape;
    require(as.size() == 2 && bs.size() == 2 && as[1] == bs[0], ErrorCode::shape_mismatch,
            "matmul wants [N,K]x[K,M]");
    Node n;
    n.op = Op::matmul;
    n.in = {a, b};
    n.val = Tensor<S>({as[0], bs[1]});
    return push(std::move(n));
  }

  NodeId reshape(NodeId x, std::vector<int64_t> to) {
    require(Tensor<S>::count(to) == node(x).val.numel(), ErrorCode::shape_mismatch,
            "reshape changes element count");
    Node n;
    n.op = Op::reshape;
    n.in = {x};
    n.val = Tensor<S>(to);
    return push(std::move(n));
  }

  // Appends `count` zeros along the last dimension.
  NodeId pad_last(NodeId x, int64_t count) {
    auto sh = node(x).val.shape;
    require(!sh.empty() && count >= 0, ErrorCode::shape_mismatch, "pad_last needs rank >= 1");
    sh.back() += count;
    Node n;
    n.op = Op::pad_last;
    n.in = {x};
    n.kernel = static_cast<int>(count);
    n.val = Tensor<S>(sh);
    return push(std::move(n));
  }

  // Valid framing, periodic Hann of win_len, zero-pad to dft_size,
  // squared amplitude (stft_power) or sqrt(power + 1e-12) (stft_mag).
  // Output [T, dft/2+1]. Identical per-frame numerics to frontend dft_power.
  NodeId stft_power(NodeId wave, int win_len, int hop, int dft, bool magnitude = false) {
    const auto& xs = node(wave).val.shape;
    require(xs.size() == 1, ErrorCode::shape_mismatch, "stft input must be rank-1");
    require(xs[0] >= win_len, ErrorCode::too_short, "stft input shorter than window");
    require(is_pow2(dft) && dft >= win_len, ErrorCode::invalid_config, "stft dft size invalid");
    Node n;
    n.op = magnitude ? Op::stft_mag : Op::stft_power;
    n.in = {wave};
    n.win_len = win_len;
    n.hop = hop;
    n.dft = dft;
    n.window = hann_window<S>(win_len);
    const int64_t frames = (xs[0] - win_len) / hop + 1;
    n.val = Tensor<S>({frames, dft / 2 + 1});
    return push(std::move(n));
  }
  NodeId stft_mag(NodeId wave, int win_len, int hop, int dft) {
    return stft_power(wave, win_len, hop, dft, true);
  }

  // mean over frames of 1 - <a_f, b_f> / (|a_f| |b_f|).
  // frame_wise: frames are the columns of [D, F]; otherwise one flat vector.
  NodeId cosine_loss(NodeId a, NodeId b, bool frame_wise) {
    require(node(a).val.shape == node(b).val.shape, ErrorCode::shape_mismatch,
            "cosine_loss operands must match");
    Node n;
    n.op = Op::cosine_loss;
    n.in = {a, b};
    n.frame_wise = frame_wise && node(a).val.rank() == 2;
    n.val = Tensor<S>(std::vector<int64_t>{});
    return push(std::move(n));
  }

  // ---- execution ----

  const Tensor<S>& value(NodeId id) const { return nodes_[static_cast<size_t>(id)].val; }
  const Tensor<S>& grad_of(NodeId id) const { return nodes_[static_cast<size_t>(id)].grad; }
  int node_count() const { return static_cast<int>(nodes_.size()); }

  // Ids of trainable parameter leaves, in insertion order.
  std::vector<NodeId> trainable_param_nodes() const {
    std::vector<NodeId> out;
    for (size_t i = 0; i < nodes_.size(); ++i)
      if (nodes_[i].op == Op::param && nodes_[i].needs_grad)
        out.push_back(static_cast<NodeId>(i));
    return out;
  }

  void forward() {
    for (auto& n : nodes_) eval(n);
  }

  // Reverse accumulation from a scalar loss. Node grads are reset every call;
  // Parameter grads are reset unless accumulate_param_grads (mini-batch
  // accumulation) is requested.
  void backward(NodeId loss, bool accumulate_param_grads = false) {
    Node& ln = node(loss);
    require(ln.val.numel() == 1, ErrorCode::contract, "backward needs a scalar loss");
    for (auto& n : nodes_) {
      if (n.needs_grad) {
        n.grad = Tensor<S>(n.val.shape);
      } else {
        n.grad = Tensor<S>();
      }
    }
    if (!accumulate_param_grads)
      for (auto& p : params_) p->grad.fill(S(0));
    if (!ln.needs_grad) return;  // loss does not depend on anything trainable
    ln.grad.v[0] = S(1);
    for (int id = static_cast<int>(nodes_.size()) - 1; id >= 0; --id) {
      Node& n = node(id);
      if (!n.needs_grad || n.grad.numel() == 0) continue;
      propagate(n);
    }
    for (auto& n : nodes_)
      if (n.op == Op::param && n.p->requires_grad && n.grad.numel() > 0)
        for (size_t i = 0; i < n.grad.v.size(); ++i) n.p->grad.v[i] += n.grad.v[i];
  }

  // Central-difference check of d(loss)/d(leaf) for sampled entries of the
  // given leaf nodes (params or grad-wanting inputs). 64-bit instantiation
  // expected for meaningful tolerances.
  GradCheckReport grad_check(NodeId loss, const std::vector<NodeId>& leaves, double eps,
                             int64_t max_samples, Rng& rng) {
    forward();
    backward(loss);
    struct Probe {
      NodeId leaf;
      int64_t idx;
      double analytic;
    };
    std::vector<Probe> probes;
    for (NodeId leaf : leaves) {
      Node& n = node(leaf);
      require(n.op == Op::input || n.op == Op::param, ErrorCode::contract,
              "grad_check probes leaves only");
      require(n.needs_grad, ErrorCode::contract, "grad_check leaf does not want gradients");
      for (int64_t i = 0; i < n.val.numel(); ++i)
        probes.push_back({leaf, i, static_cast<double>(n.grad.v[static_cast<size_t>(i)])});
    }
    // Fisher-Yates prefix shuffle to sample without replacement.
    const int64_t total = static_cast<int64_t>(probes.size());
    const int64_t take = std::min<int64_t>(max_samples, total);
    for (int64_t i = 0; i < take; ++i) {
      const int64_t j = i + static_cast<int64_t>(rng.uniform_int(static_cast<uint64_t>(total - i)));
      std::swap(probes[static_cast<size_t>(i)], probes[static_cast<size_t>(j)]);
    }
    GradCheckReport rep;
    rep.samples = take;
    for (int64_t i = 0; i < take; ++i) {
      const Probe& pr = probes[static_cast<size_t>(i)];
      S* slot = leaf_slot(pr.leaf, pr.idx);
      const S saved = *slot;
      *slot = saved + static_cast<S>(eps);
      forward();
      const double lp = static_cast<double>(node(loss).val.v[0]);
      *slot = saved - static_cast<S>(eps);
      forward();
      const double lm = static_cast<double>(node(loss).val.v[0]);
      *slot = saved;
      const double numeric = (lp - lm) / (2.0 * eps);
      const double denom = std::max({std::abs(numeric), std::abs(pr.analytic), 1e-5});
      const double rel = std::abs(numeric - pr.analytic) / denom;
      if (rel > rep.max_rel_err) {
        rep.max_rel_err = rel;
        rep.worst = "leaf " + std::to_string(pr.leaf) + " idx " + std::to_string(pr.idx) +
                    " analytic " + std::to_string(pr.analytic) + " numeric " +
                    std::to_string(numeric);
      }
    }
    forward();  // restore clean values
    return rep;
  }

 private:
  struct Node {
    Op op = Op::input;
    std::vector<int> in;
    Tensor<S> val;
    Tensor<S> grad;
    bool needs_grad = false;
    int kernel = 0, stride = 1, dilation = 1;
    int sh = 1, sw = 1, ph = 0, pw = 0;
    Pad pad = Pad::valid;
    S c = S(0);
    bool frame_wise = true;
    int win_len = 0, hop = 0, dft = 0;
    std::vector<S> window;
    ParamPtr<S> p;
  };

  std::vector<Node> nodes_;
  std::vector<ParamPtr<S>> params_;

  Node& node(NodeId id) { return nodes_[static_cast<size_t>(id)]; }
  const Node& node(NodeId id) const { return nodes_[static_cast<size_t>(id)]; }

  NodeId push(Node&& n) {
    if (n.op != Op::input && n.op != Op::constant && n.op != Op::param)
      for (int i : n.in)
        if (i >= 0 && node(i).needs_grad) n.needs_grad = true;
    nodes_.push_back(std::move(n));
    return static_cast<NodeId>(nodes_.size() - 1);
  }

  NodeId unary(Op op, NodeId x, S c) {
    Node n;
    n.op = op;
    n.in = {x};
    n.c = c;
    n.val = Tensor<S>(node(x).val.shape);
    return push(std::move(n));
  }

  NodeId binary_same_shape(Op op, NodeId a, NodeId b, std::vector<int64_t> out_shape) {
    require(node(a).val.shape == node(b).val.shape, ErrorCode::shape_mismatch,
            "elementwise operands must have identical shapes");
    Node n;
    n.op = op;
    n.in = {a, b};
    n.val = Tensor<S>(std::move(out_shape));
    return push(std::move(n));
  }

  S* leaf_slot(NodeId id, int64_t idx) {
    Node& n = node(id);
    if (n.op == Op::param) return &n.p->value.v[static_cast<size_t>(idx)];
    return &n.val.v[static_cast<size_t>(idx)];
  }

  static int64_t frames_of(const Node& n) { return n.val.shape[0]; }

  void eval(Node& n) {
    switch (n.op) {
      case Op::input:
      case Op::constant:
        return;
      case Op::param:
        n.val.v = n.p->value.v;
        return;
      case Op::conv1d: {
        const Tensor<S>& x = node(n.in[0]).val;
        const Tensor<S>& w = node(n.in[1]).val;
        const S* b = n.in[2] >= 0 ? node(n.in[2]).val.data() : nullptr;
        conv1d_fwd(x.data(), x.shape[0], x.shape[1], w.data(), w.shape[0],
                   static_cast<int>(w.shape[2]), n.stride, n.dilation, n.pad, b, n.val.data());
        return;
      }
      case Op::convt1d: {
        const Tensor<S>& x = node(n.in[0]).val;
        const Tensor<S>& w = node(n.in[1]).val;
        const S* b = n.in[2] >= 0 ? node(n.in[2]).val.data() : nullptr;
        conv_transpose1d_fwd(x.data(), x.shape[0], x.shape[1], w.data(), w.shape[0],
                             static_cast<int>(w.shape[2]), n.stride, n.pad, b, n.val.data());
        return;
      }
      case Op::conv2d: {
        const Tensor<S>& x = node(n.in[0]).val;
        const Tensor<S>& w = node(n.in[1]).val;
        const S* b = n.in[2] >= 0 ? node(n.in[2]).val.data() : nullptr;
        conv2d_fwd(x.data(), x.shape[0], x.shape[1], x.shape[2], w.data(), w.shape[0],
                   static_cast<int>(w.shape[2]), static_cast<int>(w.shape[3]), n.sh, n.sw,
                   n.ph, n.pw, b, n.val.data());
        return;
      }
      case Op::snake: {
        const Tensor<S>& x = node(n.in[0]).val;
        const Tensor<S>& a = node(n.in[1]).val;
        const int64_t ch = x.shape[0];
        const int64_t per = x.numel() / ch;
        for (int64_t c = 0; c < ch; ++c) {
          const S alpha = a.v[static_cast<size_t>(c)];
          for (int64_t i = 0; i < per; ++i) {
            const int64_t k = c * per + i;
            n.val.v[static_cast<size_t>(k)] = snake_val(x.v[static_cast<size_t>(k)], alpha);
          }
        }
        return;
      }
      case Op::leaky_relu: {
        const Tensor<S>& x = node(n.in[0]).val;
        for (size_t i = 0; i < x.v.size(); ++i) n.val.v[i] = leaky_relu_val(x.v[i], n.c);
        return;
      }
      case Op::tanh_op: {
        const Tensor<S>& x = node(n.in[0]).val;
        for (size_t i = 0; i < x.v.size(); ++i) n.val.v[i] = std::tanh(x.v[i]);
        return;
      }
      case Op::gelu: {
        const Tensor<S>& x = node(n.in[0]).val;
        for (size_t i = 0; i < x.v.size(); ++i) n.val.v[i] = gelu_val(x.v[i]);
        return;
      }
      case Op::add: {
        const Tensor<S>& a = node(n.in[0]).val;
        const Tensor<S>& b = node(n.in[1]).val;
        for (size_t i = 0; i < a.v.size(); ++i) n.val.v[i] = a.v[i] + b.v[i];
        return;
      }
      case Op::mul: {
        const Tensor<S>& a = node(n.in[0]).val;
        const Tensor<S>& b = node(n.in[1]).val;
        for (size_t i = 0; i < a.v.size(); ++i) n.val.v[i] = a.v[i] * b.v[i];
        return;
      }
      case Op::scale: {
        const Tensor<S>& x = node(n.in[0]).val;
        for (size_t i = 0; i < x.v.size(); ++i) n.val.v[i] = n.c * x.v[i];
        return;
      }
      case Op::add_scalar: {
        const Tensor<S>& x = node(n.in[0]).val;
        for (size_t i = 0; i < x.v.size(); ++i) n.val.v[i] = x.v[i] + n.c;
        return;
      }
      case Op::reshape:
        n.val.v = node(n.in[0]).val.v;
        return;
      case Op::pad_last: {
        const Tensor<S>& x = node(n.in[0]).val;
        const int64_t in_last = x.shape.back();
        const int64_t out_last = n.val.shape.back();
        const int64_t rows = x.numel() / in_last;
        n.val.fill(S(0));
        for (int64_t r = 0; r < rows; ++r)
          std::copy(x.data() + r * in_last, x.data() + (r + 1) * in_last,
                    n.val.data() + r * out_last);
        return;
      }
      case Op::mean: {
        const Tensor<S>& x = node(n.in[0]).val;
        S acc = 0;
        for (S v : x.v) acc += v;
        n.val.v[0] = acc / static_cast<S>(x.numel());
        return;
      }
      case Op::l1_mean: {
        const Tensor<S>& a = node(n.in[0]).val;
        const Tensor<S>& b = node(n.in[1]).val;
        S acc = 0;
        for (size_t i = 0; i < a.v.size(); ++i) acc += std::abs(a.v[i] - b.v[i]);
        n.val.v[0] = acc / static_cast<S>(a.numel());
        return;
      }
      case Op::mse_mean: {
        const Tensor<S>& a = node(n.in[0]).val;
        const Tensor<S>& b = node(n.in[1]).val;
        S acc = 0;
        for (size_t i = 0; i < a.v.size(); ++i) {
          const S d = a.v[i] - b.v[i];
          acc += d * d;
        }
        n.val.v[0] = acc / static_cast<S>(a.numel());
        return;
      }
      case Op::dot: {
        const Tensor<S>& a = node(n.in[0]).val;
        const Tensor<S>& b = node(n.in[1]).val;
        S acc = 0;
        for (size_t i = 0; i < a.v.size(); ++i) acc += a.v[i] * b.v[i];
        n.val.v[0] = acc;
        return;
      }
      case Op::l2_norm: {
        const Tensor<S>& x = node(n.in[0]).val;
        S acc = 0;
        for (S v : x.v) acc += v * v;
        n.val.v[0] = std::sqrt(acc);
        return;
      }
      case Op::matmul: {
        const Tensor<S>& a = node(n.in[0]).val;
        const Tensor<S>& b = node(n.in[1]).val;
        const int64_t N = a.shape[0], K = a.shape[1], M = b.shape[1];
        for (int64_t i = 0; i < N; ++i)
          for (int64_t j = 0; j < M; ++j) {
            S acc = 0;
            for (int64_t k = 0; k < K; ++k) acc += a.v[static_cast<size_t>(i * K + k)] * b.v[static_cast<size_t>(k * M + j)];
            n.val.v[static_cast<size_t>(i * M + j)] = acc;
          }
        return;
      }
      case Op::log_op: {
        const Tensor<S>& x = node(n.in[0]).val;
        for (size_t i = 0; i < x.v.size(); ++i) n.val.v[i] = std::log(x.v[i]);
        return;
      }
      case Op::clamp_min: {
        const Tensor<S>& x = node(n.in[0]).val;
        for (size_t i = 0; i < x.v.size(); ++i) n.val.v[i] = std::max(x.v[i], n.c);
        return;
      }
      case Op::stft_power:
      case Op::stft_mag: {
        const Tensor<S>& x = node(n.in[0]).val;
        const int64_t t_count = frames_of(n);
        const int64_t bins = n.dft / 2 + 1;
        for (int64_t t = 0; t < t_count; ++t) {
          std::vector<S> power =
              dft_power(x.data() + t * n.hop, n.win_len, n.window, n.dft);
          S* row = n.val.data() + t * bins;
          if (n.op == Op::stft_mag)
            for (int64_t k = 0; k < bins; ++k)
              row[k] = std::sqrt(power[static_cast<size_t>(k)] + static_cast<S>(1e-12));
          else
            std::copy(power.begin(), power.end(), row);
        }
        return;
      }
      case Op::cosine_loss: {
        const Tensor<S>& a = node(n.in[0]).val;
        const Tensor<S>& b = node(n.in[1]).val;
        int64_t frames = 1, dim = a.numel(), stride = 1;
        if (n.frame_wise) {
          dim = a.shape[0];
          frames = a.shape[1];
          stride = frames;
        }
        S acc = 0;
        for (int64_t f = 0; f < frames; ++f) {
          S d = 0, na = 0, nb = 0;
          for (int64_t c = 0; c < dim; ++c) {
            const S av = a.v[static_cast<size_t>(c * stride + f)];
            const S bv = b.v[static_cast<size_t>(c * stride + f)];
            d += av * bv;
            na += av * av;
            nb += bv * bv;
          }
          require(na > S(0) && nb > S(0), ErrorCode::degenerate_input,
                  "cosine_loss: zero-norm frame");
          acc += S(1) - d / (std::sqrt(na) * std::sqrt(nb));
        }
        n.val.v[0] = acc / static_cast<S>(frames);
        return;
      }
    }
  }

  void add_grad(NodeId id, int64_t idx, S g) {
    Node& n = node(id);
    if (n.grad.numel() > 0) n.grad.v[static_cast<size_t>(idx)] += g;
  }

  void propagate(Node& n) {
    switch (n.op) {
      case Op::input:
      case Op::constant:
      case Op::param:
        return;
      case Op::conv1d: {
        Node& xn = node(n.in[0]);
        Node& wn = node(n.in[1]);
        Node* bn = n.in[2] >= 0 ? &node(n.in[2]) : nullptr;
        const Tensor<S>& x = xn.val;
        const Tensor<S>& w = wn.val;
        conv1d_bwd(x.data(), x.shape[0], x.shape[1], w.data(), w.shape[0],
                   static_cast<int>(w.shape[2]), n.stride, n.dilation, n.pad, n.grad.data(),
                   xn.grad.numel() ? xn.grad.data() : nullptr,
                   wn.grad.numel() ? wn.grad.data() : nullptr,
                   bn && bn->grad.numel() ? bn->grad.data() : nullptr);
        return;
      }
      case Op::convt1d: {
        Node& xn = node(n.in[0]);
        Node& wn = node(n.in[1]);
        Node* bn = n.in[2] >= 0 ? &node(n.in[2]) : nullptr;
        const Tensor<S>& x = xn.val;
        const Tensor<S>& w = wn.val;
        conv_transpose1d_bwd(x.data(), x.shape[0], x.shape[1], w.data(), w.shape[0],
                             static_cast<int>(w.shape[2]), n.stride, n.pad, n.grad.data(),
                             xn.grad.numel() ? xn.grad.data() : nullptr,
                             wn.grad.numel() ? wn.grad.data() : nullptr,
                             bn && bn->grad.numel() ? bn->grad.data() : nullptr);
        return;
      }
      case Op::conv2d: {
        Node& xn = node(n.in[0]);
        Node& wn = node(n.in[1]);
        Node* bn = n.in[2] >= 0 ? &node(n.in[2]) : nullptr;
        const Tensor<S>& x = xn.val;
        const Tensor<S>& w = wn.val;
        conv2d_bwd(x.data(), x.shape[0], x.shape[1], x.shape[2], w.data(), w.shape[0],
                   static_cast<int>(w.shape[2]), static_cast<int>(w.shape[3]), n.sh, n.sw,
                   n.ph, n.pw, n.grad.data(),
                   xn.grad.numel() ? xn.grad.data() : nullptr,
                   wn.grad.numel() ? wn.grad.data() : nullptr,
                   bn && bn->grad.numel() ? bn->grad.data() : nullptr);
        return;
      }
      case Op::snake: {
        Node& xn = node(n.in[0]);
        Node& an = node(n.in[1]);
        const Tensor<S>& x = xn.val;
        const Tensor<S>& a = an.val;
        const int64_t ch = x.shape[0];
        const int64_t per = x.numel() / ch;
        for (int64_t c = 0; c < ch; ++c) {
          const S alpha = a.v[static_cast<size_t>(c)];
          for (int64_t i = 0; i < per; ++i) {
            const int64_t k = c * per + i;
            const S xv = x.v[static_cast<size_t>(k)];
            const S g = n.grad.v[static_cast<size_t>(k)];
            const S s = std::sin(alpha * xv);
            const S s2 = std::sin(S(2) * alpha * xv);
            add_grad(n.in[0], k, g * (S(1) + s2));
            add_grad(n.in[1], c, g * (xv * s2 / alpha - s * s / (alpha * alpha)));
          }
        }
        return;
      }
      case Op::leaky_relu: {
        const Tensor<S>& x = node(n.in[0]).val;
        for (int64_t i = 0; i < x.numel(); ++i)
          add_grad(n.in[0], i,
                   n.grad.v[static_cast<size_t>(i)] * (x.v[static_cast<size_t>(i)] >= S(0) ? S(1) : n.c));
        return;
      }
      case Op::tanh_op: {
        for (int64_t i = 0; i < n.val.numel(); ++i) {
          const S y = n.val.v[static_cast<size_t>(i)];
          add_grad(n.in[0], i, n.grad.v[static_cast<size_t>(i)] * (S(1) - y * y));
        }
        return;
      }
      case Op::gelu: {
        const Tensor<S>& x = node(n.in[0]).val;
        const S c = static_cast<S>(0.7978845608028654);
        for (int64_t i = 0; i < x.numel(); ++i) {
          const S xv = x.v[static_cast<size_t>(i)];
          const S u = c * (xv + static_cast<S>(0.044715) * xv * xv * xv);
          const S th = std::tanh(u);
          const S du = c * (S(1) + S(3) * static_cast<S>(0.044715) * xv * xv);
          const S dy = static_cast<S>(0.5) * (S(1) + th) +
                       static_cast<S>(0.5) * xv * (S(1) - th * th) * du;
          add_grad(n.in[0], i, n.grad.v[static_cast<size_t>(i)] * dy);
        }
        return;
      }
      case Op::add: {
        for (int64_t i = 0; i < n.val.numel(); ++i) {
          add_grad(n.in[0], i, n.grad.v[static_cast<size_t>(i)]);
          add_grad(n.in[1], i, n.grad.v[static_cast<size_t>(i)]);
        }
        return;
      }
      case Op::mul: {
        const Tensor<S>& a = node(n.in[0]).val;
        const Tensor<S>& b = node(n.in[1]).val;
        for (int64_t i = 0; i < n.val.numel(); ++i) {
          add_grad(n.in[0], i, n.grad.v[static_cast<size_t>(i)] * b.v[static_cast<size_t>(i)]);
          add_grad(n.in[1], i, n.grad.v[static_cast<size_t>(i)] * a.v[static_cast<size_t>(i)]);
        }
        return;
      }
      case Op::scale: {
        for (int64_t i = 0; i < n.val.numel(); ++i)
          add_grad(n.in[0], i, n.grad.v[static_cast<size_t>(i)] * n.c);
        return;
      }
      case Op::add_scalar: {
        for (int64_t i = 0; i < n.val.numel(); ++i)
          add_grad(n.in[0], i, n.grad.v[static_cast<size_t>(i)]);
        return;
      }
      case Op::reshape: {
        for (int64_t i = 0; i < n.val.numel(); ++i)
          add_grad(n.in[0], i, n.grad.v[static_cast<size_t>(i)]);
        return;
      }
      case Op::pad_last: {
        const Tensor<S>& x = node(n.in[0]).val;
        const int64_t in_last = x.shape.back();
        const int64_t out_last = n.val.shape.back();
        const int64_t rows = x.numel() / in_last;
        for (int64_t r = 0; r < rows; ++r)
          for (int64_t i = 0; i < in_last; ++i)
            add_grad(n.in[0], r * in_last + i, n.grad.v[static_cast<size_t>(r * out_last + i)]);
        return;
      }
      case Op::mean: {
        const S g = n.grad.v[0] / static_cast<S>(node(n.in[0]).val.numel());
        for (int64_t i = 0; i < node(n.in[0]).val.numel(); ++i) add_grad(n.in[0], i, g);
        return;
      }
      case Op::l1_mean: {
        const Tensor<S>& a = node(n.in[0]).val;
        const Tensor<S>& b = node(n.in[1]).val;
        const S g = n.grad.v[0] / static_cast<S>(a.numel());
        for (int64_t i = 0; i < a.numel(); ++i) {
          const S d = a.v[static_cast<size_t>(i)] - b.v[static_cast<size_t>(i)];
          const S s = d > S(0) ? S(1) : (d < S(0) ? S(-1) : S(0));
          add_grad(n.in[0], i, g * s);
          add_grad(n.in[1], i, -g * s);
        }
        return;
      }
      case Op::mse_mean: {
        const Tensor<S>& a = node(n.in[0]).val;
        const Tensor<S>& b = node(n.in[1]).val;
        const S g = S(2) * n.grad.v[0] / static_cast<S>(a.numel());
        for (int64_t i = 0; i < a.numel(); ++i) {
          const S d = a.v[static_cast<size_t>(i)] - b.v[static_cast<size_t>(i)];
          add_grad(n.in[0], i, g * d);
          add_grad(n.in[1], i, -g * d);
        }
        return;
      }
      case Op::dot: {
        const Tensor<S>& a = node(n.in[0]).val;
        const Tensor<S>& b = node(n.in[1]).val;
        const S g = n.grad.v[0];
        for (int64_t i = 0; i < a.numel(); ++i) {
          add_grad(n.in[0], i, g * b.v[static_cast<size_t>(i)]);
          add_grad(n.in[1], i, g * a.v[static_cast<size_t>(i)]);
        }
        return;
      }
      case Op::l2_norm: {
        const Tensor<S>& x = node(n.in[0]).val;
        const S norm = std::max(n.val.v[0], static_cast<S>(1e-30));
        const S g = n.grad.v[0];
        for (int64_t i = 0; i < x.numel(); ++i)
          add_grad(n.in[0], i, g * x.v[static_cast<size_t>(i)] / norm);
        return;
      }
      case Op::matmul: {
        Node& an = node(n.in[0]);
        Node& bn = node(n.in[1]);
        const Tensor<S>& a = an.val;
        const Tensor<S>& b = bn.val;
        const int64_t N = a.shape[0], K = a.shape[1], M = b.shape[1];
        if (an.grad.numel())
          for (int64_t i = 0; i < N; ++i)
            for (int64_t k = 0; k < K; ++k) {
              S acc = 0;
              for (int64_t j = 0; j < M; ++j)
                acc += n.grad.v[static_cast<size_t>(i * M + j)] * b.v[static_cast<size_t>(k * M + j)];
              an.grad.v[static_cast<size_t>(i * K + k)] += acc;
            }
        if (bn.grad.numel())
          for (int64_t k = 0; k < K; ++k)
            for (int64_t j = 0; j < M; ++j) {
              S acc = 0;
              for (int64_t i = 0; i < N; ++i)
                acc += a.v[static_cast<size_t>(i * K + k)] * n.grad.v[static_cast<size_t>(i * M + j)];
              bn.grad.v[static_cast<size_t>(k * M + j)] += acc;
            }
        return;
      }
      case Op::log_op: {
        const Tensor<S>& x = node(n.in[0]).val;
        for (int64_t i = 0; i < x.numel(); ++i)
          add_grad(n.in[0], i, n.grad.v[static_cast<size_t>(i)] / x.v[static_cast<size_t>(i)]);
        return;
      }
      case Op::clamp_min: {
        const Tensor<S>& x = node(n.in[0]).val;
        for (int64_t i = 0; i < x.numel(); ++i)
          if (x.v[static_cast<size_t>(i)] > n.c)
            add_grad(n.in[0], i, n.grad.v[static_cast<size_t>(i)]);
        return;
      }
      case Op::stft_power:
      case Op::stft_mag: {
        Node& xn = node(n.in[0]);
        if (!xn.grad.numel()) return;
        const Tensor<S>& x = xn.val;
        const int64_t t_count = frames_of(n);
        const int64_t bins = n.dft / 2 + 1;
        const int64_t half = n.dft / 2;
        std::vector<S> re, im, cre, cim, wx(static_cast<size_t>(n.win_len));
        for (int64_t t = 0; t < t_count; ++t) {
          const S* frame = x.data() + t * n.hop;
          for (int i = 0; i < n.win_len; ++i) wx[static_cast<size_t>(i)] = n.window[static_cast<size_t>(i)] * frame[i];
          real_dft_onesided(wx.data(), n.win_len, n.dft, re, im);
          const S* grow = n.grad.data() + t * bins;
          // d(power)/d(re,im) = (2re, 2im); magnitude divides by 2*mag.
          cre.assign(static_cast<size_t>(n.dft), S(0));
          cim.assign(static_cast<size_t>(n.dft), S(0));
          for (int64_t k = 0; k <= half; ++k) {
            S gre, gim;
            if (n.op == Op::stft_power) {
              gre = S(2) * re[static_cast<size_t>(k)] * grow[k];
              gim = S(2) * im[static_cast<size_t>(k)] * grow[k];
            } else {
              const S mag = n.val.v[static_cast<size_t>(t * bins + k)];
              gre = re[static_cast<size_t>(k)] * grow[k] / mag;
              gim = im[static_cast<size_t>(k)] * grow[k] / mag;
            }
            if (k == 0 || k == half) {
              cre[static_cast<size_t>(k)] = gre;
            } else {
              cre[static_cast<size_t>(k)] = static_cast<S>(0.5) * gre;
              cim[static_cast<size_t>(k)] = static_cast<S>(0.5) * gim;
              cre[static_cast<size_t>(n.dft - k)] = static_cast<S>(0.5) * gre;
              cim[static_cast<size_t>(n.dft - k)] = static_cast<S>(-0.5) * gim;
            }
          }
          fft_radix2(cre.data(), cim.data(), n.dft, true);
          for (int i = 0; i < n.win_len; ++i)
            xn.grad.v[static_cast<size_t>(t * n.hop + i)] +=
                n.window[static_cast<size_t>(i)] * cre[static_cast<size_t>(i)];
        }
        return;
      }
      case Op::cosine_loss: {
        const Tensor<S>& a = node(n.in[0]).val;
        const Tensor<S>& b = node(n.in[1]).val;
        int64_t frames = 1, dim = a.numel(), stride = 1;
        if (n.frame_wise) {
          dim = a.shape[0];
          frames = a.shape[1];
          stride = frames;
        }
        const S g = n.grad.v[0] / static_cast<S>(frames);
        for (int64_t f = 0; f < frames; ++f) {
          S d = 0, na2 = 0, nb2 = 0;
          for (int64_t c = 0; c < dim; ++c) {
            const S av = a.v[static_cast<size_t>(c * stride + f)];
            const S bv = b.v[static_cast<size_t>(c * stride + f)];
            d += av * bv;
            na2 += av * av;
            nb2 += bv * bv;
          }
          const S na = std::sqrt(na2), nb = std::sqrt(nb2);
          for (int64_t c = 0; c < dim; ++c) {
            const int64_t k = c * stride + f;
            const S av = a.v[static_cast<size_t>(k)];
            const S bv = b.v[static_cast<size_t>(k)];
            add_grad(n.in[0], k, -g * (bv / (na * nb) - d * av / (na2 * na * nb)));
            add_grad(n.in[1], k, -g * (av / (na * nb) - d * bv / (nb2 * nb * na)));
          }
        }
        return;
      }
    }
  }
};

}  // namespace lowvoc

#endif  // LOWVOC_GRAPH_HPP
