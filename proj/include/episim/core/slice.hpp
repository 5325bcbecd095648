#pragma once

#include <complex>
#include <cstdint>
#include <vector>

#include "episim/core/errors.hpp"

namespace episim {

using cplx = std::complex<double>;

/// Where a complex slice currently lives. Transitions happen only through
/// the Fourier ops: Image <-> HybridXKy along Y (columns), HybridXKy <->
/// KSpace along X (rows).
enum class Domain { Image, HybridXKy, KSpace };

/// 2-D real image, row-major. X = columns = frequency encoding,
/// Y = rows = phase encoding.
struct RealSlice {
  int width = 0;
  int height = 0;
  double dx_mm = 1.0;
  double dy_mm = 1.0;
  std::vector<double> data;

  RealSlice() = default;
  RealSlice(int w, int h, double dx = 1.0, double dy = 1.0)
      : width(w), height(h), dx_mm(dx), dy_mm(dy), data(size_t(w) * h, 0.0) {}

  size_t size() const { return data.size(); }
  double& at(int x, int y) { return data[size_t(y) * width + x]; }
  double at(int x, int y) const { return data[size_t(y) * width + x]; }
  const double* row(int y) const { return data.data() + size_t(y) * width; }
  double* row(int y) { return data.data() + size_t(y) * width; }

  bool same_shape(const RealSlice& o) const {
    return width == o.width && height == o.height;
  }
};

/// 2-D complex image, row-major, tagged with its current domain.
struct ComplexSlice {
  int width = 0;
  int height = 0;
  double dx_mm = 1.0;
  double dy_mm = 1.0;
  Domain domain = Domain::Image;
  std::vector<cplx> data;

  ComplexSlice() = default;
  ComplexSlice(int w, int h, Domain d = Domain::Image, double dx = 1.0, double dy = 1.0)
      : width(w), height(h), dx_mm(dx), dy_mm(dy), domain(d), data(size_t(w) * h) {}

  size_t size() const { return data.size(); }
  cplx& at(int x, int y) { return data[size_t(y) * width + x]; }
  cplx at(int x, int y) const { return data[size_t(y) * width + x]; }
  cplx* row(int y) { return data.data() + size_t(y) * width; }
  const cplx* row(int y) const { return data.data() + size_t(y) * width; }

  bool same_shape(const ComplexSlice& o) const {
    return width == o.width && height == o.height;
  }
};

/// Boolean pixel mask matching the slice it annotates.
struct Mask {
  int width = 0;
  int height = 0;
  std::vector<uint8_t> data;

  Mask() = default;
  Mask(int w, int h) : width(w), height(h), data(size_t(w) * h, 0) {}

  bool at(int x, int y) const { return data[size_t(y) * width + x] != 0; }
  void set(int x, int y, bool v) { data[size_t(y) * width + x] = v ? 1 : 0; }
  size_t count() const {
    size_t n = 0;
    for (uint8_t v : data) n += (v != 0);
    return n;
  }
};

/// Ordered stack of dimension-equal slices.
template <class SliceT>
struct VolumeOf {
  std::vector<SliceT> slices;
  double slice_thickness_mm = 1.0;

  bool empty() const { return slices.empty(); }
  size_t size() const { return slices.size(); }
  void check_uniform() const {
    if (slices.empty()) throw DataError("volume is empty");
    for (const auto& s : slices)
      if (s.width != slices.front().width || s.height != slices.front().height)
        throw DataError("volume slices differ in dimensions");
  }
};

using Volume = VolumeOf<RealSlice>;
using ComplexVolume = VolumeOf<ComplexSlice>;

/// Per-pixel magnitude sqrt(re^2 + im^2).
RealSlice modulus(const ComplexSlice& s);

/// Lift a real slice into the complex image domain.
ComplexSlice to_complex(const RealSlice& s);

/// Real part / imaginary part as real slices.
RealSlice real_part(const ComplexSlice& s);
RealSlice imag_part(const ComplexSlice& s);

/// Reassemble a complex image-domain slice from two components.
ComplexSlice from_components(const RealSlice& re, const RealSlice& im);

}  // namespace episim
