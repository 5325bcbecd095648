#include "episim/core/segment.hpp"

#include <algorithm>

namespace episim {

namespace {

// Separable min/max filter over a (2r+1) square, borders clamped.
Mask square_filter(const Mask& m, int r, bool take_max) {
  if (r <= 0) return m;
  const int w = m.width, h = m.height;
  Mask tmp(w, h), out(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      uint8_t v = take_max ? 0 : 1;
      const int x0 = std::max(0, x - r), x1 = std::min(w - 1, x + r);
      for (int xx = x0; xx <= x1; ++xx) {
        const uint8_t s = m.at(xx, y) ? 1 : 0;
        v = take_max ? std::max(v, s) : std::min(v, s);
      }
      tmp.set(x, y, v != 0);
    }
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      uint8_t v = take_max ? 0 : 1;
      const int y0 = std::max(0, y - r), y1 = std::min(h - 1, y + r);
      for (int yy = y0; yy <= y1; ++yy) {
        const uint8_t s = tmp.at(x, yy) ? 1 : 0;
        v = take_max ? std::max(v, s) : std::min(v, s);
      }
      out.set(x, y, v != 0);
    }
  return out;
}

}  // namespace

Mask dilate_square(const Mask& m, int radius) { return square_filter(m, radius, true); }
Mask erode_square(const Mask& m, int radius) { return square_filter(m, radius, false); }

Mask segment_object(const RealSlice& s, double threshold, int closing_radius) {
  if (threshold < 0) throw ConfigError("segmentation threshold must be >= 0");
  Mask m(s.width, s.height);
  for (int y = 0; y < s.height; ++y)
    for (int x = 0; x < s.width; ++x) m.set(x, y, s.at(x, y) > threshold);
  if (closing_radius > 0) m = erode_square(dilate_square(m, closing_radius), closing_radius);
  return m;
}

Mask invert(const Mask& m) {
  Mask out(m.width, m.height);
  for (size_t i = 0; i < m.data.size(); ++i) out.data[i] = m.data[i] ? 0 : 1;
  return out;
}

}  // namespace episim
