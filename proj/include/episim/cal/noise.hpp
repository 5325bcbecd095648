#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "episim/core/slice.hpp"

namespace episim::cal {

/// Complex zero-mean Gaussian noise field with a target per-component std
/// and an optional per-column std shape along the frequency-encoding axis.
struct NoiseMap {
  ComplexSlice slice;
  double declared_std = 1.0;
  std::vector<double> profile;  // empty = flat
};

/// Per-column noise std along X, with validity flags for columns that had
/// enough background samples.
struct NoiseProfile {
  std::vector<double> std_per_column;
  std::vector<uint8_t> valid;

  size_t size() const { return std_per_column.size(); }
};

/// i.i.d. N(0, declared_std^2) per component, per-column scaled by the
/// profile when given. Deterministic for (seed, dims).
NoiseMap generate_noise_map(uint64_t seed, int width, int height,
                            const std::vector<double>& profile = {},
                            double declared_std = 1.0);

/// Sample std per column over the background pixels of a repetition stack.
/// Columns with fewer than two samples are flagged invalid.
NoiseProfile noise_std_profile(const std::vector<RealSlice>& repetitions,
                               const Mask& background);

/// Least-squares profile matching over the given background columns:
/// s = sum(ref*img) / sum(img^2). Set absolute_error to use the
/// absolute-error variant (1-D golden-section on sum |s*img - ref|).
double match_noise_scale(const NoiseProfile& image_profile, const NoiseProfile& reference,
                         const std::vector<int>& background_columns,
                         bool absolute_error = false);

/// Componentwise sum.
ComplexSlice add_noise(const ComplexSlice& s, const NoiseMap& noise);

/// Scale the whole volume so the mean over the object mask equals
/// target_snr (noise std convention is 1).
Volume set_snr(const Volume& v, const std::vector<Mask>& object_masks, double target_snr);
RealSlice set_snr(const RealSlice& s, const Mask& object_mask, double target_snr);

/// CSV export: column_index, std, is_background.
void save_profile_csv(const NoiseProfile& p, const std::vector<int>& background_columns,
                      const std::string& path);

}  // namespace episim::cal
