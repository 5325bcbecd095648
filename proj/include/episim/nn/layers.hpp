#pragma once

#include <utility>
#include <vector>

#include "episim/nn/tensor.hpp"

namespace episim::nn {

/// Same-size 2-D cross-correlation layer with zero padding of (k-1)/2 and a
/// per-output-channel bias. Weight layout: [c_out][c_in][ky][kx].
struct ConvLayer {
  int c_out = 0, c_in = 0, k = 1;
  std::vector<double> weights;
  std::vector<double> bias;

  ConvLayer() = default;
  ConvLayer(int co, int ci, int kk)
      : c_out(co), c_in(ci), k(kk),
        weights(size_t(co) * ci * kk * kk, 0.0), bias(size_t(co), 0.0) {
    if (kk % 2 == 0) throw ConfigError("conv kernel size must be odd");
  }

  size_t taps() const { return size_t(c_in) * k * k; }
  double& w_at(int co, int ci, int ky, int kx) {
    return weights[((size_t(co) * c_in + ci) * k + ky) * k + kx];
  }
};

Tensor4 conv2d_forward(const Tensor4& x, const ConvLayer& layer);

struct ConvGrads {
  Tensor4 grad_x;
  std::vector<double> grad_weights;
  std::vector<double> grad_bias;
};

/// Exact gradients of conv2d_forward wrt input, weights and bias.
ConvGrads conv2d_backward(const Tensor4& x, const ConvLayer& layer, const Tensor4& grad_out);

/// Accumulating variant used by the training loop: adds grad_weights /
/// grad_bias (scaled by gscale) into the provided buffers and returns grad_x.
Tensor4 conv2d_backward_acc(const Tensor4& x, const ConvLayer& layer, const Tensor4& grad_out,
                            double gscale, std::vector<double>& grad_weights,
                            std::vector<double>& grad_bias);

Tensor4 relu_forward(const Tensor4& x);
/// Gradient gates on x > 0 (derivative at 0 is 0).
Tensor4 relu_backward(const Tensor4& x, const Tensor4& grad_out);

/// Mean over all elements of the squared difference, and its gradient wrt
/// the first argument: 2*(a-b)/numel.
std::pair<double, Tensor4> mse_loss(const Tensor4& a, const Tensor4& b);
double mse_value(const Tensor4& a, const Tensor4& b);

namespace detail {
/// Test hook: cap the number of image rows per im2col chunk (0 = automatic).
void set_conv_chunk_rows(int rows);
}  // namespace detail

}  // namespace episim::nn
