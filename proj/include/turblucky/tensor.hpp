#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "turblucky/error.hpp"

namespace turblucky {

// NCHW activation tensor.
template <class T>
struct Tensor4 {
  int n = 0, c = 0, h = 0, w = 0;
  std::vector<T> data;

  Tensor4() = default;
  Tensor4(int n_, int c_, int h_, int w_, T fill = T(0))
      : n(n_), c(c_), h(h_), w(w_), data(std::size_t(n_) * c_ * h_ * w_, fill) {
    require(n_ > 0 && c_ > 0 && h_ > 0 && w_ > 0, "tensor dims must be positive");
  }

  std::size_t plane() const { return std::size_t(h) * w; }
  std::size_t size() const { return data.size(); }
  T* plane_ptr(int ni, int ci) { return data.data() + (std::size_t(ni) * c + ci) * plane(); }
  const T* plane_ptr(int ni, int ci) const { return data.data() + (std::size_t(ni) * c + ci) * plane(); }
  T& at(int ni, int ci, int y, int x) { return plane_ptr(ni, ci)[std::size_t(y) * w + x]; }
  T at(int ni, int ci, int y, int x) const { return plane_ptr(ni, ci)[std::size_t(y) * w + x]; }

  bool same_shape(const Tensor4& o) const { return n == o.n && c == o.c && h == o.h && w == o.w; }
  Tensor4 zeros_like() const { return Tensor4(n, c, h, w); }

  template <class U>
  Tensor4<U> cast() const {
    Tensor4<U> out(n, c, h, w);
    for (std::size_t i = 0; i < data.size(); ++i) out.data[i] = U(data[i]);
    return out;
  }
};

}  // namespace turblucky
