#ifndef LOWVOC_KERNELS_HPP
#define LOWVOC_KERNELS_HPP

#include <cmath>
#include <cstdint>
#include <vector>

#include "lowvoc/error.hpp"
#include "lowvoc/tensor.hpp"

namespace lowvoc {

enum class Pad { causal, same, valid };

// Every convolution in the engine funnels through this dot product. Offline
// forward, graph forward and the streaming runtime gather operands into the
// same [c_in, tap] layout and call it, so their outputs match bitwise.
// Fixed 4-way partial sums; deterministic association.
template <class S>
inline S dot_acc(const S* a, const S* b, int64_t n) {
  S s0 = 0, s1 = 0, s2 = 0, s3 = 0;
  int64_t i = 0;
  for (; i + 4 <= n; i += 4) {
    s0 += a[i] * b[i];
    s1 += a[i + 1] * b[i + 1];
    s2 += a[i + 2] * b[i + 2];
    s3 += a[i + 3] * b[i + 3];
  }
  for (; i < n; ++i) s0 += a[i] * b[i];
  return ((s0 + s1) + (s2 + s3));
}

inline int64_t conv1d_left_pad(int kernel, int dilation, Pad pad) {
  const int64_t span = static_cast<int64_t>(kernel - 1) * dilation;
  switch (pad) {
    case Pad::causal: return span;
    case Pad::same: return span / 2;
    case Pad::valid: return 0;
  }
  return 0;
}

inline int64_t conv1d_right_pad(int kernel, int dilation, Pad pad) {
  const int64_t span = static_cast<int64_t>(kernel - 1) * dilation;
  return pad == Pad::same ? span - span / 2 : 0;
}

inline int64_t conv1d_out_len(int64_t len, int kernel, int stride, int dilation, Pad pad) {
  const int64_t span = static_cast<int64_t>(kernel - 1) * dilation;
  const int64_t padded = len + conv1d_left_pad(kernel, dilation, pad) +
                         conv1d_right_pad(kernel, dilation, pad);
  require(padded >= span + 1, ErrorCode::too_short, "input too short for convolution");
  return (padded - span - 1) / stride + 1;
}

// y[co][t] = bias[co] + sum_{ci,j} w[co][ci][j] * xpad[ci][t*stride + j*dil].
// x: [cin, len]; w: [cout, cin, k]; bias: [cout] or nullptr; y: [cout, out_len].
template <class S>
void conv1d_fwd(const S* x, int64_t cin, int64_t len, const S* w, int64_t cout,
                int kernel, int stride, int dilation, Pad pad, const S* bias, S* y) {
  const int64_t pl = conv1d_left_pad(kernel, dilation, pad);
  const int64_t out_len = conv1d_out_len(len, kernel, stride, dilation, pad);
  std::vector<S> win(static_cast<size_t>(cin * kernel));
  for (int64_t t = 0; t < out_len; ++t) {
    const int64_t base = t * stride - pl;
    S* wp = win.data();
    for (int64_t ci = 0; ci < cin; ++ci) {
      const S* xr = x + ci * len;
      for (int j = 0; j < kernel; ++j) {
        const int64_t idx = base + static_cast<int64_t>(j) * dilation;
        *wp++ = (idx >= 0 && idx < len) ? xr[idx] : S(0);
      }
    }
    for (int64_t co = 0; co < cout; ++co) {
      const S b = bias ? bias[co] : S(0);
      y[co * out_len + t] = b + dot_acc(w + co * cin * kernel, win.data(), cin * kernel);
    }
  }
}

// Gradients for conv1d_fwd. Any of gx/gw/gb may be null; non-null buffers are
// accumulated into (callers zero them first).
template <class S>
void conv1d_bwd(const S* x, int64_t cin, int64_t len, const S* w, int64_t cout,
                int kernel, int stride, int dilation, Pad pad, const S* gy,
                S* gx, S* gw, S* gb) {
  const int64_t pl = conv1d_left_pad(kernel, dilation, pad);
  const int64_t out_len = conv1d_out_len(len, kernel, stride, dilation, pad);
  for (int64_t co = 0; co < cout; ++co) {
    const S* gyr = gy + co * out_len;
    if (gb) {
      S acc = 0;
      for (int64_t t = 0; t < out_len; ++t) acc += gyr[t];
      gb[co] += acc;
    }
    for (int64_t ci = 0; ci < cin; ++ci) {
      const S* xr = x + ci * len;
      const S* wr = w + (co * cin + ci) * kernel;
      S* gxr = gx ? gx + ci * len : nullptr;
      S* gwr = gw ? gw + (co * cin + ci) * kernel : nullptr;
      for (int64_t t = 0; t < out_len; ++t) {
        const int64_t base = t * stride - pl;
        const S g = gyr[t];
        for (int j = 0; j < kernel; ++j) {
          const int64_t idx = base + static_cast<int64_t>(j) * dilation;
          if (idx < 0 || idx >= len) continue;
          if (gxr) gxr[idx] += wr[j] * g;
          if (gwr) gwr[j] += xr[idx] * g;
        }
      }
    }
  }
}

// Transposed conv = zero insertion by `stride` followed by a stride-1 conv.
// Output length is exactly len*stride in both padding modes; in causal mode
// output sample n depends only on input frames <= floor(n/stride).
template <class S>
void upsample_zero_stuff(const S* x, int64_t cin, int64_t len, int stride, S* up) {
  const int64_t ulen = len * stride;
  std::fill(up, up + cin * ulen, S(0));
  for (int64_t ci = 0; ci < cin; ++ci)
    for (int64_t t = 0; t < len; ++t) up[ci * ulen + t * stride] = x[ci * len + t];
}

template <class S>
void conv_transpose1d_fwd(const S* x, int64_t cin, int64_t len, const S* w,
                          int64_t cout, int kernel, int stride, Pad pad,
                          const S* bias, S* y) {
  require(pad != Pad::valid, ErrorCode::invalid_config,
          "transposed conv supports causal or same padding");
  std::vector<S> up(static_cast<size_t>(cin * len * stride));
  upsample_zero_stuff(x, cin, len, stride, up.data());
  conv1d_fwd(up.data(), cin, len * stride, w, cout, kernel, 1, 1, pad, bias, y);
}

template <class S>
void conv_transpose1d_bwd(const S* x, int64_t cin, int64_t len, const S* w,
                          int64_t cout, int kernel, int stride, Pad pad,
                          const S* gy, S* gx, S* gw, S* gb) {
  const int64_t ulen = len * stride;
  std::vector<S> up(static_cast<size_t>(cin * ulen));
  upsample_zero_stuff(x, cin, len, stride, up.data());
  std::vector<S> gup;
  if (gx) gup.assign(static_cast<size_t>(cin * ulen), S(0));
  conv1d_bwd(up.data(), cin, ulen, w, cout, kernel, 1, 1, pad, gy,
             gx ? gup.data() : nullptr, gw, gb);
  if (gx)
    for (int64_t ci = 0; ci < cin; ++ci)
      for (int64_t t = 0; t < len; ++t) gx[ci * len + t] += gup[static_cast<size_t>(ci * ulen + t * stride)];
}

// 2-D cross-correlation with explicit symmetric zero padding.
// x: [cin, h, w]; k: [cout, cin, kh, kw]; y: [cout, ho, wo].
inline int64_t conv2d_out_dim(int64_t in, int k, int stride, int pad) {
  require(in + 2 * pad >= k, ErrorCode::too_short, "input too short for 2d convolution");
  return (in + 2 * pad - k) / stride + 1;
}

template <class S>
void conv2d_fwd(const S* x, int64_t cin, int64_t h, int64_t w, const S* ker,
                int64_t cout, int kh, int kw, int sh, int sw, int ph, int pw,
                const S* bias, S* y) {
  const int64_t ho = conv2d_out_dim(h, kh, sh, ph);
  const int64_t wo = conv2d_out_dim(w, kw, sw, pw);
  std::vector<S> win(static_cast<size_t>(cin * kh * kw));
  for (int64_t oy = 0; oy < ho; ++oy) {
    for (int64_t ox = 0; ox < wo; ++ox) {
      const int64_t by = oy * sh - ph, bx = ox * sw - pw;
      S* wp = win.data();
      for (int64_t ci = 0; ci < cin; ++ci) {
        const S* xc = x + ci * h * w;
        for (int j = 0; j < kh; ++j) {
          const int64_t iy = by + j;
          for (int i = 0; i < kw; ++i) {
            const int64_t ix = bx + i;
            *wp++ = (iy >= 0 && iy < h && ix >= 0 && ix < w) ? xc[iy * w + ix] : S(0);
          }
        }
      }
      for (int64_t co = 0; co < cout; ++co) {
        const S b = bias ? bias[co] : S(0);
        y[(co * ho + oy) * wo + ox] =
            b + dot_acc(ker + co * cin * kh * kw, win.data(), cin * kh * kw);
      }
    }
  }
}

template <class S>
void conv2d_bwd(const S* x, int64_t cin, int64_t h, int64_t w, const S* ker,
                int64_t cout, int kh, int kw, int sh, int sw, int ph, int pw,
                const S* gy, S* gx, S* gk, S* gb) {
  const int64_t ho = conv2d_out_dim(h, kh, sh, ph);
  const int64_t wo = conv2d_out_dim(w, kw, sw, pw);
  for (int64_t co = 0; co < cout; ++co) {
    const S* gyc = gy + co * ho * wo;
    if (gb) {
      S acc = 0;
      for (int64_t i = 0; i < ho * wo; ++i) acc += gyc[i];
      gb[co] += acc;
    }
    for (int64_t ci = 0; ci < cin; ++ci) {
      const S* xc = x + ci * h * w;
      const S* kc = ker + (co * cin + ci) * kh * kw;
      S* gxc = gx ? gx + ci * h * w : nullptr;
      S* gkc = gk ? gk + (co * cin + ci) * kh * kw : nullptr;
      for (int64_t oy = 0; oy < ho; ++oy) {
        for (int64_t ox = 0; ox < wo; ++ox) {
          const S g = gyc[oy * wo + ox];
          const int64_t by = oy * sh - ph, bx = ox * sw - pw;
          for (int j = 0; j < kh; ++j) {
            const int64_t iy = by + j;
            if (iy < 0 || iy >= h) continue;
            for (int i = 0; i < kw; ++i) {
              const int64_t ix = bx + i;
              if (ix < 0 || ix >= w) continue;
              if (gxc) gxc[iy * w + ix] += kc[j * kw + i] * g;
              if (gkc) gkc[j * kw + i] += xc[iy * w + ix] * g;
            }
          }
        }
      }
    }
  }
}

// Snake activation: y = x + (1/alpha) sin^2(alpha x), alpha per channel.
template <class S>
inline S snake_val(S x, S alpha) {
  const S s = std::sin(alpha * x);
  return x + (S(1) / alpha) * s * s;
}

template <class S>
inline S gelu_val(S x) {
  // tanh approximation of GELU
  const S c = static_cast<S>(0.7978845608028654);  // sqrt(2/pi)
  const S inner = c * (x + static_cast<S>(0.044715) * x * x * x);
  return static_cast<S>(0.5) * x * (S(1) + std::tanh(inner));
}

template <class S>
inline S leaky_relu_val(S x, S slope) {
  return x >= S(0) ? x : slope * x;
}

}  // namespace lowvoc

#endif  // LOWVOC_KERNELS_HPP
