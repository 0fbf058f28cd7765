#pragma once

// The closed set of operations the guidance network is built from, each with its
// reverse-mode counterpart. Backward functions accumulate (+=) into gradient buffers.

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "turblucky/filters.hpp"
#include "turblucky/tensor.hpp"

namespace turblucky::nn {

// Weight layout [cout][cin / groups][k][k]; k in {1, 3}; spatial size preserved via
// reflect padding of k / 2. groups must divide cin and cout.
struct ConvGeometry {
  int cin = 0, cout = 0, k = 1, groups = 1;

  int cin_per_group() const { return cin / groups; }
  int cout_per_group() const { return cout / groups; }
  std::size_t weight_count() const { return std::size_t(cout) * cin_per_group() * k * k; }
};

namespace detail {

inline void check_geometry(const ConvGeometry& g, int channels, std::size_t weights, std::size_t biases) {
  require(g.k == 1 || g.k == 3, "only 1x1 and 3x3 kernels are supported");
  require(g.groups >= 1 && g.cin % g.groups == 0 && g.cout % g.groups == 0, "bad group count");
  require(channels == g.cin, "conv input has " + std::to_string(channels) + " channels, expected " +
                                 std::to_string(g.cin));
  require(weights == g.weight_count(), "conv weight size mismatch");
  require(biases == std::size_t(g.cout), "conv bias size mismatch");
}

// out[y][x] += wv * in[refl(y + dy)][refl(x + dx)]
template <class T>
void shifted_axpy(const T* in, T* out, T wv, int h, int w, int dy, int dx) {
  for (int y = 0; y < h; ++y) {
    const T* src = in + std::size_t(reflect_index(y + dy, h)) * w;
    T* dst = out + std::size_t(y) * w;
    const int x_lo = std::max(0, -dx), x_hi = std::min(w, w - dx);
    for (int x = 0; x < x_lo; ++x) dst[x] += wv * src[reflect_index(x + dx, w)];
    for (int x = x_lo; x < x_hi; ++x) dst[x] += wv * src[x + dx];
    for (int x = std::max(x_hi, x_lo); x < w; ++x) dst[x] += wv * src[reflect_index(x + dx, w)];
  }
}

// Adjoint of shifted_axpy: grad_in[refl(y + dy)][refl(x + dx)] += wv * grad_out[y][x],
// and returns sum over y, x of grad_out[y][x] * in[refl(y + dy)][refl(x + dx)].
template <class T>
T shifted_axpy_adjoint(const T* in, const T* grad_out, T* grad_in, T wv, int h, int w, int dy, int dx) {
  T dw = T(0);
  for (int y = 0; y < h; ++y) {
    const std::size_t row = std::size_t(reflect_index(y + dy, h)) * w;
    const T* src = in + row;
    T* gin = grad_in ? grad_in + row : nullptr;
    const T* go = grad_out + std::size_t(y) * w;
    const int x_lo = std::max(0, -dx), x_hi = std::min(w, w - dx);
    for (int x = 0; x < w; ++x) {
      const int sx = (x >= x_lo && x < x_hi) ? x + dx : reflect_index(x + dx, w);
      dw += go[x] * src[sx];
      if (gin) gin[sx] += wv * go[x];
    }
  }
  return dw;
}

}  // namespace detail

template <class T>
Tensor4<T> conv_forward(const Tensor4<T>& x, const ConvGeometry& g, std::span<const T> weight,
                        std::span<const T> bias) {
  detail::check_geometry(g, x.c, weight.size(), bias.size());
  require(g.k == 1 || (x.h >= 2 && x.w >= 2), "3x3 reflect padding needs spatial dims >= 2");
  Tensor4<T> y(x.n, g.cout, x.h, x.w);
  const int r = g.k / 2;
  const int cpg_in = g.cin_per_group(), cpg_out = g.cout_per_group();
  for (int ni = 0; ni < x.n; ++ni) {
    for (int co = 0; co < g.cout; ++co) {
      T* out = y.plane_ptr(ni, co);
      std::fill(out, out + y.plane(), bias[std::size_t(co)]);
      const int group = co / cpg_out;
      for (int cl = 0; cl < cpg_in; ++cl) {
        const T* in = x.plane_ptr(ni, group * cpg_in + cl);
        const T* wk = weight.data() + (std::size_t(co) * cpg_in + cl) * g.k * g.k;
        if (g.k == 1) {
          const T wv = wk[0];
          for (std::size_t p = 0; p < y.plane(); ++p) out[p] += wv * in[p];
          continue;
        }
        for (int ky = 0; ky < g.k; ++ky)
          for (int kx = 0; kx < g.k; ++kx)
            detail::shifted_axpy(in, out, wk[ky * g.k + kx], x.h, x.w, ky - r, kx - r);
      }
    }
  }
  return y;
}

// Given dL/dy, accumulates dL/dweight, dL/dbias and (when grad_x is non-null) dL/dx.
template <class T>
void conv_backward(const Tensor4<T>& x, const ConvGeometry& g, std::span<const T> weight,
                   const Tensor4<T>& grad_y, std::span<T> grad_weight, std::span<T> grad_bias,
                   Tensor4<T>* grad_x) {
  detail::check_geometry(g, x.c, weight.size(), grad_bias.size());
  require(grad_y.n == x.n && grad_y.c == g.cout && grad_y.h == x.h && grad_y.w == x.w,
          "conv upstream gradient shape mismatch");
  require(grad_weight.size() == weight.size(), "conv weight gradient size mismatch");
  if (grad_x) require(grad_x->same_shape(x), "conv input gradient shape mismatch");
  const int r = g.k / 2;
  const int cpg_in = g.cin_per_group(), cpg_out = g.cout_per_group();
  for (int ni = 0; ni < x.n; ++ni) {
    for (int co = 0; co < g.cout; ++co) {
      const T* go = grad_y.plane_ptr(ni, co);
      T bsum = T(0);
      for (std::size_t p = 0; p < grad_y.plane(); ++p) bsum += go[p];
      grad_bias[std::size_t(co)] += bsum;
      const int group = co / cpg_out;
      for (int cl = 0; cl < cpg_in; ++cl) {
        const int ci = group * cpg_in + cl;
        const T* in = x.plane_ptr(ni, ci);
        T* gin = grad_x ? grad_x->plane_ptr(ni, ci) : nullptr;
        const std::size_t wbase = (std::size_t(co) * cpg_in + cl) * g.k * g.k;
        if (g.k == 1) {
          const T wv = weight[wbase];
          T dw = T(0);
          for (std::size_t p = 0; p < grad_y.plane(); ++p) dw += go[p] * in[p];
          if (gin)
            for (std::size_t p = 0; p < grad_y.plane(); ++p) gin[p] += wv * go[p];
          grad_weight[wbase] += dw;
          continue;
        }
        for (int ky = 0; ky < g.k; ++ky)
          for (int kx = 0; kx < g.k; ++kx) {
            const std::size_t wi = wbase + std::size_t(ky * g.k + kx);
            grad_weight[wi] +=
                detail::shifted_axpy_adjoint(in, go, gin, weight[wi], x.h, x.w, ky - r, kx - r);
          }
      }
    }
  }
}

inline ConvGeometry depthwise3x3(int channels) { return {channels, channels, 3, channels}; }
inline ConvGeometry pointwise(int cin, int cout) { return {cin, cout, 1, 1}; }
inline ConvGeometry conv3x3(int cin, int cout) { return {cin, cout, 3, 1}; }

template <class T>
Tensor4<T> relu(Tensor4<T> x) {
  for (T& v : x.data) v = v > T(0) ? v : T(0);
  return x;
}

// dx = dy where the forward input (or output) was positive.
template <class T>
Tensor4<T> relu_backward(const Tensor4<T>& y, Tensor4<T> grad) {
  for (std::size_t i = 0; i < grad.data.size(); ++i)
    if (!(y.data[i] > T(0))) grad.data[i] = T(0);
  return grad;
}

template <class T>
Tensor4<T> tanh(Tensor4<T> x) {
  for (T& v : x.data) v = std::tanh(v);
  return x;
}

template <class T>
Tensor4<T> tanh_backward(const Tensor4<T>& y, Tensor4<T> grad) {
  for (std::size_t i = 0; i < grad.data.size(); ++i) grad.data[i] *= T(1) - y.data[i] * y.data[i];
  return grad;
}

// Softmax across the channel axis at every (n, y, x).
template <class T>
Tensor4<T> softmax_channels(const Tensor4<T>& x) {
  Tensor4<T> y = x.zeros_like();
  for (int ni = 0; ni < x.n; ++ni) {
    for (std::size_t p = 0; p < x.plane(); ++p) {
      T mx = x.plane_ptr(ni, 0)[p];
      for (int ci = 1; ci < x.c; ++ci) mx = std::max(mx, x.plane_ptr(ni, ci)[p]);
      T sum = T(0);
      for (int ci = 0; ci < x.c; ++ci) {
        const T e = std::exp(x.plane_ptr(ni, ci)[p] - mx);
        y.plane_ptr(ni, ci)[p] = e;
        sum += e;
      }
      const T inv = T(1) / sum;
      for (int ci = 0; ci < x.c; ++ci) y.plane_ptr(ni, ci)[p] *= inv;
    }
  }
  return y;
}

template <class T>
Tensor4<T> softmax_channels_backward(const Tensor4<T>& y, const Tensor4<T>& grad_y) {
  Tensor4<T> gx = y.zeros_like();
  for (int ni = 0; ni < y.n; ++ni) {
    for (std::size_t p = 0; p < y.plane(); ++p) {
      T dot = T(0);
      for (int ci = 0; ci < y.c; ++ci) dot += y.plane_ptr(ni, ci)[p] * grad_y.plane_ptr(ni, ci)[p];
      for (int ci = 0; ci < y.c; ++ci)
        gx.plane_ptr(ni, ci)[p] = y.plane_ptr(ni, ci)[p] * (grad_y.plane_ptr(ni, ci)[p] - dot);
    }
  }
  return gx;
}

// out[n][c] = sum_i weights[n][i] * frames[n][i * C + c]; weights broadcast over colour.
template <class T>
Tensor4<T> weighted_sum(const Tensor4<T>& weights, const Tensor4<T>& frames, int colour_channels) {
  const int nf = weights.c;
  require(frames.c == nf * colour_channels && frames.n == weights.n && frames.h == weights.h &&
              frames.w == weights.w,
          "frame tensor does not match weight map");
  Tensor4<T> out(weights.n, colour_channels, weights.h, weights.w);
  for (int ni = 0; ni < weights.n; ++ni)
    for (int i = 0; i < nf; ++i) {
      const T* wp = weights.plane_ptr(ni, i);
      for (int c = 0; c < colour_channels; ++c) {
        const T* fp = frames.plane_ptr(ni, i * colour_channels + c);
        T* op = out.plane_ptr(ni, c);
        for (std::size_t p = 0; p < out.plane(); ++p) op[p] += wp[p] * fp[p];
      }
    }
  return out;
}

template <class T>
Tensor4<T> weighted_sum_backward_weights(const Tensor4<T>& frames, const Tensor4<T>& grad_out, int nf) {
  const int cc = grad_out.c;
  Tensor4<T> gw(grad_out.n, nf, grad_out.h, grad_out.w);
  for (int ni = 0; ni < grad_out.n; ++ni)
    for (int i = 0; i < nf; ++i) {
      T* gp = gw.plane_ptr(ni, i);
      for (int c = 0; c < cc; ++c) {
        const T* fp = frames.plane_ptr(ni, i * cc + c);
        const T* go = grad_out.plane_ptr(ni, c);
        for (std::size_t p = 0; p < gw.plane(); ++p) gp[p] += go[p] * fp[p];
      }
    }
  return gw;
}

template <class T>
Tensor4<T> add(Tensor4<T> a, const Tensor4<T>& b) {
  require(a.same_shape(b), "tensor sum shape mismatch");
  for (std::size_t i = 0; i < a.data.size(); ++i) a.data[i] += b.data[i];
  return a;
}

}  // namespace turblucky::nn
