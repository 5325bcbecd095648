#include "episim/core/slice.hpp"

#include <cmath>

namespace episim {

RealSlice modulus(const ComplexSlice& s) {
  RealSlice out(s.width, s.height, s.dx_mm, s.dy_mm);
  for (size_t i = 0; i < s.data.size(); ++i) out.data[i] = std::abs(s.data[i]);
  return out;
}

ComplexSlice to_complex(const RealSlice& s) {
  ComplexSlice out(s.width, s.height, Domain::Image, s.dx_mm, s.dy_mm);
  for (size_t i = 0; i < s.data.size(); ++i) out.data[i] = cplx(s.data[i], 0.0);
  return out;
}

RealSlice real_part(const ComplexSlice& s) {
  RealSlice out(s.width, s.height, s.dx_mm, s.dy_mm);
  for (size_t i = 0; i < s.data.size(); ++i) out.data[i] = s.data[i].real();
  return out;
}

RealSlice imag_part(const ComplexSlice& s) {
  RealSlice out(s.width, s.height, s.dx_mm, s.dy_mm);
  for (size_t i = 0; i < s.data.size(); ++i) out.data[i] = s.data[i].imag();
  return out;
}

ComplexSlice from_components(const RealSlice& re, const RealSlice& im) {
  if (!re.same_shape(im)) throw DataError("component slices differ in shape");
  ComplexSlice out(re.width, re.height, Domain::Image, re.dx_mm, re.dy_mm);
  for (size_t i = 0; i < re.data.size(); ++i)
    out.data[i] = cplx(re.data[i], im.data[i]);
  return out;
}

}  // namespace episim
