#include "episim/nn/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include "episim/core/rng.hpp"
#include "episim/kernels/kernels.hpp"

namespace episim::nn {

namespace k = episim::kernels;

void TrainConfig::validate() const {
  if (lr <= 0 || batch <= 0 || max_epochs <= 0 || patience <= 0 || min_improvement <= 0 ||
      beta1 <= 0 || beta2 <= 0 || eps <= 0 || init_std <= 0)
    throw ConfigError("train config fields must all be positive");
  if (patience >= max_epochs) throw ConfigError("patience must be below max_epochs");
}

namespace {

struct ParamBlock {
  std::vector<double>* p;
  size_t offset;  // into the concatenated moment vectors
};

std::vector<ParamBlock> blocks_of(SrcnnModel& m) {
  std::vector<ParamBlock> b;
  size_t off = 0;
  for (auto* v : {&m.l1.weights, &m.l1.bias, &m.l2.weights, &m.l2.bias,
                  &m.l3.weights, &m.l3.bias}) {
    b.push_back({v, off});
    off += v->size();
  }
  return b;
}

Tensor4 to_tensor(const RealSlice& s, double mean, double inv_std) {
  Tensor4 t(1, 1, s.height, s.width);
  for (size_t i = 0; i < s.data.size(); ++i) t.data[i] = (s.data[i] - mean) * inv_std;
  return t;
}

double forward_val_loss(const SrcnnModel& m, const Tensor4& x, const Tensor4& clean) {
  Tensor4 est = m.forward(x);
  Tensor4 denoised(x.n, x.c, x.h, x.w);
  k::vsub(x.data.data(), est.data.data(), denoised.data.data(), x.numel());
  return mse_value(denoised, clean);
}

}  // namespace

TrainResult train(SrcnnModel model, const std::vector<Example>& train_set,
                  const std::vector<Example>& val_set, const TrainConfig& cfg) {
  cfg.validate();
  if (train_set.empty() || val_set.empty())
    throw ConfigError("training and validation sets must be non-empty");

  // standardization stats over the training inputs
  double sum = 0.0, sumsq = 0.0;
  size_t count = 0;
  for (const auto& ex : train_set) {
    sum += k::sum(ex.input.data.data(), ex.input.data.size());
    sumsq += k::sumsq(ex.input.data.data(), ex.input.data.size());
    count += ex.input.data.size();
  }
  const double mean = sum / double(count);
  const double var = std::max(sumsq / double(count) - mean * mean, 0.0);
  const double sd = std::sqrt(var);
  model.input_mean = mean;
  model.input_std = sd > 1e-12 ? sd : 1.0;
  const double inv_std = 1.0 / model.input_std;

  std::vector<Tensor4> xs, cs, vxs, vcs;
  xs.reserve(train_set.size());
  cs.reserve(train_set.size());
  for (const auto& ex : train_set) {
    if (!ex.input.same_shape(ex.clean)) throw DataError("example input/clean shape mismatch");
    xs.push_back(to_tensor(ex.input, mean, inv_std));
    cs.push_back(to_tensor(ex.clean, mean, inv_std));
  }
  for (const auto& ex : val_set) {
    vxs.push_back(to_tensor(ex.input, mean, inv_std));
    vcs.push_back(to_tensor(ex.clean, mean, inv_std));
  }

  auto blocks = blocks_of(model);
  AdamState adam;
  adam.m.assign(model.parameter_count(), 0.0);
  adam.v.assign(model.parameter_count(), 0.0);

  std::vector<double> gw1(model.l1.weights.size()), gb1(model.l1.bias.size());
  std::vector<double> gw2(model.l2.weights.size()), gb2(model.l2.bias.size());
  std::vector<double> gw3(model.l3.weights.size()), gb3(model.l3.bias.size());

  Rng shuffle_rng(derive_seed(cfg.seed, 0x5ff1e));
  std::vector<size_t> order(train_set.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;

  TrainResult result;
  result.best_val_loss = std::numeric_limits<double>::infinity();
  double patience_ref = std::numeric_limits<double>::infinity();
  int bad_epochs = 0;

  // snapshot of the best weights seen so far
  SrcnnModel best = model;

  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    // seeded Fisher-Yates
    for (size_t i = order.size(); i > 1; --i) {
      const size_t j = shuffle_rng.uniform_int(i);
      std::swap(order[i - 1], order[j]);
    }

    double epoch_loss = 0.0;
    for (size_t b0 = 0; b0 < order.size(); b0 += size_t(cfg.batch)) {
      const size_t bn = std::min(size_t(cfg.batch), order.size() - b0);
      const double gscale = 1.0 / double(bn);
      for (auto* g : {&gw1, &gb1, &gw2, &gb2, &gw3, &gb3})
        std::fill(g->begin(), g->end(), 0.0);

      for (size_t bi = 0; bi < bn; ++bi) {
        const Tensor4& x = xs[order[b0 + bi]];
        const Tensor4& clean = cs[order[b0 + bi]];

        Tensor4 z1 = conv2d_forward(x, model.l1);
        Tensor4 a1 = relu_forward(z1);
        Tensor4 z2 = conv2d_forward(a1, model.l2);
        Tensor4 a2 = relu_forward(z2);
        Tensor4 est = conv2d_forward(a2, model.l3);

        Tensor4 denoised(x.n, x.c, x.h, x.w);
        k::vsub(x.data.data(), est.data.data(), denoised.data.data(), x.numel());
        auto [loss, gd] = mse_loss(denoised, clean);
        epoch_loss += loss;
        // d(denoised)/d(est) = -1
        k::scale(gd.data.data(), -1.0, gd.numel());

        Tensor4 ga2 = conv2d_backward_acc(a2, model.l3, gd, gscale, gw3, gb3);
        Tensor4 gz2 = relu_backward(z2, ga2);
        Tensor4 ga1 = conv2d_backward_acc(a1, model.l2, gz2, gscale, gw2, gb2);
        Tensor4 gz1 = relu_backward(z1, ga1);
        conv2d_backward_acc(x, model.l1, gz1, gscale, gw1, gb1);
      }

      adam.t += 1;
      const double bc1 = 1.0 / (1.0 - std::pow(cfg.beta1, double(adam.t)));
      const double bc2 = 1.0 / (1.0 - std::pow(cfg.beta2, double(adam.t)));
      const std::vector<double>* grads[] = {&gw1, &gb1, &gw2, &gb2, &gw3, &gb3};
      for (size_t i = 0; i < blocks.size(); ++i) {
        auto& blk = blocks[i];
        k::adam_update(blk.p->data(), adam.m.data() + blk.offset, adam.v.data() + blk.offset,
                       grads[i]->data(), blk.p->size(), cfg.lr, cfg.beta1, cfg.beta2, cfg.eps,
                       bc1, bc2);
      }
    }
    const double train_loss = epoch_loss / double(train_set.size());

    double val_loss = 0.0;
    for (size_t i = 0; i < vxs.size(); ++i) val_loss += forward_val_loss(model, vxs[i], vcs[i]);
    val_loss /= double(vxs.size());

    if (!std::isfinite(train_loss) || !std::isfinite(val_loss))
      throw NumericalError("training diverged at epoch " + std::to_string(epoch));

    EpochRecord rec{epoch, train_loss, val_loss, false};
    if (val_loss < result.best_val_loss) {
      result.best_val_loss = val_loss;
      result.best_epoch = epoch;
      best.l1 = model.l1;
      best.l2 = model.l2;
      best.l3 = model.l3;
      rec.is_best = true;
    }
    result.history.push_back(rec);

    // patience counts epochs without a *significant* improvement
    if (patience_ref - val_loss > cfg.min_improvement) {
      patience_ref = val_loss;
      bad_epochs = 0;
    } else {
      bad_epochs += 1;
      if (bad_epochs >= cfg.patience) break;
    }
  }

  best.input_mean = model.input_mean;
  best.input_std = model.input_std;
  best.seed = cfg.seed;
  best.training_snr = model.training_snr;
  result.model = std::move(best);
  return result;
}

void save_history_csv(const std::vector<EpochRecord>& history, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw DataError("cannot write " + path);
  f << "epoch,train_loss,val_loss,is_best\n";
  for (const auto& r : history) {
    char line[128];
    std::snprintf(line, sizeof(line), "%d,%.17g,%.17g,%d\n", r.epoch, r.train_loss, r.val_loss,
                  r.is_best ? 1 : 0);
    f << line;
  }
}

}  // namespace episim::nn
