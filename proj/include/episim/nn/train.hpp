#pragma once

#include <string>
#include <vector>

#include "episim/nn/model.hpp"

namespace episim::nn {

struct TrainConfig {
  double lr = 0.001;
  int batch = 9;
  int max_epochs = 10000;
  int patience = 50;
  double min_improvement = 1e-8;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  uint64_t seed = 1;
  double init_std = 0.02;

  void validate() const;
};

/// One training pair: a noisy component slice and its noise-free target.
struct Example {
  RealSlice input;
  RealSlice clean;
};

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  bool is_best = false;
};

struct TrainResult {
  SrcnnModel model;  // weights at the minimum validation loss
  std::vector<EpochRecord> history;
  int best_epoch = 0;
  double best_val_loss = 0.0;
};

/// Adam moments for every parameter block plus the shared step counter.
struct AdamState {
  std::vector<double> m, v;  // concatenated in fixed layer order
  long t = 0;
};

/// Full training loop: seeded shuffle, mini-batches, residual forward
/// (denoised = input - model(input)), MSE against the clean target, Adam,
/// early stopping on the validation loss. Single-threaded and
/// bit-reproducible for a fixed seed and SIMD lane.
TrainResult train(SrcnnModel model, const std::vector<Example>& train_set,
                  const std::vector<Example>& val_set, const TrainConfig& cfg);

/// (epoch, train_loss, val_loss, is_best) CSV.
void save_history_csv(const std::vector<EpochRecord>& history, const std::string& path);

}  // namespace episim::nn
