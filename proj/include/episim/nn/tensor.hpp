#pragma once

#include <cstddef>
#include <vector>

#include "episim/core/errors.hpp"

namespace episim::nn {

/// Dense (n, c, h, w) container, row-major with w innermost, f64.
struct Tensor4 {
  int n = 0, c = 0, h = 0, w = 0;
  std::vector<double> data;

  Tensor4() = default;
  Tensor4(int n_, int c_, int h_, int w_)
      : n(n_), c(c_), h(h_), w(w_), data(size_t(n_) * c_ * h_ * w_, 0.0) {}

  size_t numel() const { return data.size(); }
  size_t plane() const { return size_t(h) * w; }
  size_t chw() const { return size_t(c) * h * w; }

  double* image(int in) { return data.data() + size_t(in) * chw(); }
  const double* image(int in) const { return data.data() + size_t(in) * chw(); }
  double* channel(int in, int ic) { return image(in) + size_t(ic) * plane(); }
  const double* channel(int in, int ic) const { return image(in) + size_t(ic) * plane(); }

  double& at(int in, int ic, int y, int x) {
    return data[((size_t(in) * c + ic) * h + y) * w + x];
  }
  double at(int in, int ic, int y, int x) const {
    return data[((size_t(in) * c + ic) * h + y) * w + x];
  }

  bool same_shape(const Tensor4& o) const {
    return n == o.n && c == o.c && h == o.h && w == o.w;
  }
};

}  // namespace episim::nn
