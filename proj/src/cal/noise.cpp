#include "episim/cal/noise.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "episim/core/rng.hpp"

namespace episim::cal {

NoiseMap generate_noise_map(uint64_t seed, int width, int height,
                            const std::vector<double>& profile, double declared_std) {
  if (width <= 0 || height <= 0) throw ConfigError("noise map dims must be positive");
  if (!profile.empty() && int(profile.size()) != width)
    throw ConfigError("noise profile length must equal width");
  for (double v : profile)
    if (v < 0.0) throw ConfigError("noise profile values must be non-negative");

  NoiseMap out;
  out.declared_std = declared_std;
  out.profile = profile;
  out.slice = ComplexSlice(width, height, Domain::Image);
  Rng rng(derive_seed(seed, 0xA01));
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) {
      double re, im;
      rng.normal_pair(re, im);
      const double s = declared_std * (profile.empty() ? 1.0 : profile[size_t(x)]);
      out.slice.at(x, y) = cplx(re * s, im * s);
    }
  return out;
}

NoiseProfile noise_std_profile(const std::vector<RealSlice>& repetitions,
                               const Mask& background) {
  if (repetitions.size() < 2) throw DataError("noise profile needs at least two repetitions");
  const int w = repetitions.front().width, h = repetitions.front().height;
  for (const auto& r : repetitions)
    if (r.width != w || r.height != h) throw DataError("repetition stack dims differ");
  if (background.width != w || background.height != h)
    throw DataError("background mask dims mismatch");

  NoiseProfile p;
  p.std_per_column.assign(size_t(w), 0.0);
  p.valid.assign(size_t(w), 0);
  for (int x = 0; x < w; ++x) {
    double sum = 0.0, sumsq = 0.0;
    size_t n = 0;
    for (int y = 0; y < h; ++y) {
      if (!background.at(x, y)) continue;
      for (const auto& r : repetitions) {
        const double v = r.at(x, y);
        sum += v;
        sumsq += v * v;
        ++n;
      }
    }
    if (n >= 2) {
      const double mean = sum / double(n);
      const double var = std::max(0.0, (sumsq - double(n) * mean * mean) / double(n - 1));
      p.std_per_column[size_t(x)] = std::sqrt(var);
      p.valid[size_t(x)] = 1;
    }
  }
  return p;
}

double match_noise_scale(const NoiseProfile& image_profile, const NoiseProfile& reference,
                         const std::vector<int>& background_columns, bool absolute_error) {
  if (image_profile.size() != reference.size())
    throw DataError("profiles must have equal length");
  std::vector<int> cols;
  for (int c : background_columns) {
    if (c < 0 || c >= int(image_profile.size())) throw DataError("background column out of range");
    if (image_profile.valid[size_t(c)] && reference.valid[size_t(c)]) cols.push_back(c);
  }
  if (cols.empty()) throw DataError("no valid background columns to match on");

  double num = 0.0, den = 0.0;
  for (int c : cols) {
    num += reference.std_per_column[size_t(c)] * image_profile.std_per_column[size_t(c)];
    den += image_profile.std_per_column[size_t(c)] * image_profile.std_per_column[size_t(c)];
  }
  if (den == 0.0) throw NumericalError("image noise profile is zero on the background");
  const double ls = num / den;
  if (!absolute_error) return ls;

  // golden-section on sum|s*img - ref| around the least-squares solution
  auto cost = [&](double s) {
    double e = 0.0;
    for (int c : cols)
      e += std::abs(s * image_profile.std_per_column[size_t(c)] -
                    reference.std_per_column[size_t(c)]);
    return e;
  };
  double lo = 0.0, hi = ls * 4.0 + 1e-12;
  const double gr = 0.6180339887498949;
  double a = hi - gr * (hi - lo), b = lo + gr * (hi - lo);
  double fa = cost(a), fb = cost(b);
  for (int it = 0; it < 200; ++it) {
    if (fa < fb) {
      hi = b;
      b = a;
      fb = fa;
      a = hi - gr * (hi - lo);
      fa = cost(a);
    } else {
      lo = a;
      a = b;
      fa = fb;
      b = lo + gr * (hi - lo);
      fb = cost(b);
    }
  }
  return 0.5 * (lo + hi);
}

ComplexSlice add_noise(const ComplexSlice& s, const NoiseMap& noise) {
  if (!s.same_shape(noise.slice)) throw DataError("noise map dims mismatch");
  ComplexSlice out = s;
  for (size_t i = 0; i < out.data.size(); ++i) out.data[i] += noise.slice.data[i];
  return out;
}

Volume set_snr(const Volume& v, const std::vector<Mask>& object_masks, double target_snr) {
  v.check_uniform();
  if (target_snr <= 0) throw ConfigError("target SNR must be positive");
  if (object_masks.size() != v.size()) throw DataError("one object mask per slice required");
  double sum = 0.0;
  size_t n = 0;
  for (size_t k = 0; k < v.size(); ++k) {
    const auto& s = v.slices[k];
    const auto& m = object_masks[k];
    if (m.width != s.width || m.height != s.height) throw DataError("mask dims mismatch");
    for (size_t i = 0; i < s.data.size(); ++i)
      if (m.data[i]) {
        sum += s.data[i];
        ++n;
      }
  }
  if (n == 0) throw DataError("object mask is empty");
  const double mean = sum / double(n);
  if (mean == 0.0) throw NumericalError("object mean is zero; cannot set SNR");
  const double scale = target_snr / mean;
  Volume out = v;
  for (auto& s : out.slices)
    for (auto& x : s.data) x *= scale;
  return out;
}

RealSlice set_snr(const RealSlice& s, const Mask& object_mask, double target_snr) {
  Volume v;
  v.slices.push_back(s);
  return set_snr(v, {object_mask}, target_snr).slices.front();
}

void save_profile_csv(const NoiseProfile& p, const std::vector<int>& background_columns,
                      const std::string& path) {
  std::vector<uint8_t> is_bg(p.size(), 0);
  for (int c : background_columns)
    if (c >= 0 && c < int(p.size())) is_bg[size_t(c)] = 1;
  std::ofstream f(path);
  if (!f) throw DataError("cannot write " + path);
  f << "column_index,std,is_background\n";
  for (size_t i = 0; i < p.size(); ++i) {
    char line[96];
    std::snprintf(line, sizeof(line), "%zu,%.17g,%d\n", i, p.std_per_column[i], int(is_bg[i]));
    f << line;
  }
}

}  // namespace episim::cal
