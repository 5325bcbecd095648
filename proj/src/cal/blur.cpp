#include "episim/cal/blur.hpp"

#include <cmath>

namespace episim::cal {

namespace {

inline int reflect(int i, int n) {
  while (i < 0 || i >= n) {
    if (i < 0) i = -i - 1;
    if (i >= n) i = 2 * n - 1 - i;
  }
  return i;
}

template <class T>
void blur_inplace(std::vector<T>& data, int w, int h, const std::vector<double>& k) {
  const int r = int(k.size() / 2);
  std::vector<T> tmp(data.size());
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      T acc{};
      for (int i = -r; i <= r; ++i)
        acc += k[size_t(i + r)] * data[size_t(y) * w + reflect(x + i, w)];
      tmp[size_t(y) * w + x] = acc;
    }
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      T acc{};
      for (int i = -r; i <= r; ++i)
        acc += k[size_t(i + r)] * tmp[size_t(reflect(y + i, h)) * w + x];
      data[size_t(y) * w + x] = acc;
    }
}

}  // namespace

std::vector<double> gaussian_kernel(double sigma) {
  if (sigma < 0) throw ConfigError("blur sigma must be >= 0");
  if (sigma == 0.0) return {1.0};
  const int r = std::max(1, int(std::ceil(4.0 * sigma)));
  std::vector<double> k(size_t(2 * r + 1));
  double norm = 0.0;
  for (int i = -r; i <= r; ++i) {
    k[size_t(i + r)] = std::exp(-0.5 * double(i) * i / (sigma * sigma));
    norm += k[size_t(i + r)];
  }
  for (auto& v : k) v /= norm;
  return k;
}

RealSlice gaussian_blur(const RealSlice& s, double sigma) {
  RealSlice out = s;
  if (sigma == 0.0) return out;
  blur_inplace(out.data, out.width, out.height, gaussian_kernel(sigma));
  return out;
}

ComplexSlice gaussian_blur(const ComplexSlice& s, double sigma) {
  ComplexSlice out = s;
  if (sigma == 0.0) return out;
  blur_inplace(out.data, out.width, out.height, gaussian_kernel(sigma));
  return out;
}

}  // namespace episim::cal
