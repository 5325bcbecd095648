#pragma once

#include <cstdint>
#include <string>
#include <utility>

#include "episim/core/slice.hpp"
#include "episim/nn/layers.hpp"

namespace episim::nn {

/// Three-layer residual noise estimator: conv 9x9 (1->64) + ReLU,
/// conv 1x1 (64->32) + ReLU, conv 5x5 (32->1) linear. The network output is
/// the noise map; the denoised image is input minus that map.
struct SrcnnModel {
  ConvLayer l1, l2, l3;
  // standardization applied to inputs before the network (training-set stats)
  double input_mean = 0.0;
  double input_std = 1.0;
  // provenance
  double training_snr = 0.0;
  uint64_t seed = 0;

  struct Arch {
    int c1 = 64, c2 = 32;
    int k1 = 9, k2 = 1, k3 = 5;
  };

  /// Seeded Gaussian init (std init_std), zero biases.
  static SrcnnModel init(const Arch& arch, uint64_t seed, double init_std = 0.02);

  /// Noise estimate in the standardized domain. Input must be standardized.
  Tensor4 forward(const Tensor4& x) const;

  size_t parameter_count() const;
};

/// Standardize / undo with the model's stored stats.
double standardize_value(const SrcnnModel& m, double v);

/// Run the denoiser on one real component slice. Returns
/// (denoised, noise_estimate); denoised + noise_estimate == input.
std::pair<RealSlice, RealSlice> denoise(const SrcnnModel& m, const RealSlice& input);

/// <stem>.srcnn.json (shapes, hyperparameters, stats, content hash) +
/// <stem>.srcnn.bin (raw little-endian f32 weights). Load->save->load is
/// bit-stable.
void save_model(const SrcnnModel& m, const std::string& stem);
SrcnnModel load_model(const std::string& stem);

}  // namespace episim::nn
