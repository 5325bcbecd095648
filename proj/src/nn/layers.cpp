#include "episim/nn/layers.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "episim/kernels/kernels.hpp"

namespace episim::nn {

namespace k = episim::kernels;

namespace {

int g_chunk_rows_override = 0;

// Rows of output processed per im2col chunk: keep the patch panel around
// 2 MB so it stays cache-resident for the GEMM that follows.
int chunk_rows_for(const ConvLayer& l, int w) {
  if (g_chunk_rows_override > 0) return g_chunk_rows_override;
  const size_t budget_doubles = 262144;
  const size_t per_row = l.taps() * size_t(w);
  int rows = int(std::max<size_t>(1, budget_doubles / std::max<size_t>(per_row, 1)));
  return rows;
}

// Patch panel for output rows [y0, y0+rows): P[t][yl*w + x] covers tap
// t = (ci*k + ky)*k + kx. Out-of-image samples are zero.
void im2col_chunk(const Tensor4& x, int in, const ConvLayer& l, int y0, int rows,
                  std::vector<double>& panel) {
  const int w = x.w, h = x.h, kk = l.k, pad = (kk - 1) / 2;
  const size_t cols = size_t(rows) * w;
  panel.assign(l.taps() * cols, 0.0);
  for (int ci = 0; ci < l.c_in; ++ci) {
    const double* xc = x.channel(in, ci);
    for (int ky = 0; ky < kk; ++ky) {
      for (int kx = 0; kx < kk; ++kx) {
        const size_t t = (size_t(ci) * kk + ky) * kk + kx;
        double* dst = panel.data() + t * cols;
        const int xlo = std::max(0, pad - kx);
        const int xhi = std::min(w, w + pad - kx);
        if (xlo >= xhi) continue;
        for (int yl = 0; yl < rows; ++yl) {
          const int ys = y0 + yl + ky - pad;
          if (ys < 0 || ys >= h) continue;
          std::memcpy(dst + size_t(yl) * w + xlo, xc + size_t(ys) * w + xlo + kx - pad,
                      size_t(xhi - xlo) * sizeof(double));
        }
      }
    }
  }
}

// Scatter-add the panel gradient back into grad_x for the same chunk.
void col2im_chunk_add(std::vector<double>& panel, const ConvLayer& l, int y0, int rows,
                      Tensor4& gx, int in) {
  const int w = gx.w, h = gx.h, kk = l.k, pad = (kk - 1) / 2;
  const size_t cols = size_t(rows) * w;
  for (int ci = 0; ci < l.c_in; ++ci) {
    double* gc = gx.channel(in, ci);
    for (int ky = 0; ky < kk; ++ky) {
      for (int kx = 0; kx < kk; ++kx) {
        const size_t t = (size_t(ci) * kk + ky) * kk + kx;
        const double* src = panel.data() + t * cols;
        const int xlo = std::max(0, pad - kx);
        const int xhi = std::min(w, w + pad - kx);
        if (xlo >= xhi) continue;
        for (int yl = 0; yl < rows; ++yl) {
          const int ys = y0 + yl + ky - pad;
          if (ys < 0 || ys >= h) continue;
          k::axpy(1.0, src + size_t(yl) * w + xlo, gc + size_t(ys) * w + xlo + kx - pad,
                  size_t(xhi - xlo));
        }
      }
    }
  }
}

// Direct tap-loop path for narrow layers (small c_out), where the GEMM form
// has no register reuse and just burns memory bandwidth.
void conv_direct_fwd(const Tensor4& x, const ConvLayer& l, Tensor4& out, int in) {
  const int w = x.w, h = x.h, kk = l.k, pad = (kk - 1) / 2;
  for (int co = 0; co < l.c_out; ++co) {
    double* oc = out.channel(in, co);
    std::fill(oc, oc + out.plane(), l.bias[size_t(co)]);
    for (int ci = 0; ci < l.c_in; ++ci) {
      const double* xc = x.channel(in, ci);
      for (int ky = 0; ky < kk; ++ky) {
        for (int kx = 0; kx < kk; ++kx) {
          const double wgt = l.weights[((size_t(co) * l.c_in + ci) * kk + ky) * kk + kx];
          if (wgt == 0.0) continue;
          const int xlo = std::max(0, pad - kx);
          const int xhi = std::min(w, w + pad - kx);
          for (int y = 0; y < h; ++y) {
            const int ys = y + ky - pad;
            if (ys < 0 || ys >= h) continue;
            k::axpy(wgt, xc + size_t(ys) * w + xlo + kx - pad, oc + size_t(y) * w + xlo,
                    size_t(xhi - xlo));
          }
        }
      }
    }
  }
}

void conv_direct_bwd(const Tensor4& x, const ConvLayer& l, const Tensor4& go, int in,
                     Tensor4& gx, double gscale, std::vector<double>& gw,
                     std::vector<double>& gb) {
  const int w = x.w, h = x.h, kk = l.k, pad = (kk - 1) / 2;
  for (int co = 0; co < l.c_out; ++co) {
    const double* goc = go.channel(in, co);
    gb[size_t(co)] += gscale * k::sum(goc, go.plane());
    for (int ci = 0; ci < l.c_in; ++ci) {
      const double* xc = x.channel(in, ci);
      double* gxc = gx.channel(in, ci);
      for (int ky = 0; ky < kk; ++ky) {
        for (int kx = 0; kx < kk; ++kx) {
          const int xlo = std::max(0, pad - kx);
          const int xhi = std::min(w, w + pad - kx);
          if (xlo >= xhi) continue;
          double acc = 0.0;
          const double wgt = l.weights[((size_t(co) * l.c_in + ci) * kk + ky) * kk + kx];
          for (int y = 0; y < h; ++y) {
            const int ys = y + ky - pad;
            if (ys < 0 || ys >= h) continue;
            acc += k::dot(goc + size_t(y) * w + xlo, xc + size_t(ys) * w + xlo + kx - pad,
                          size_t(xhi - xlo));
            k::axpy(wgt, goc + size_t(y) * w + xlo, gxc + size_t(ys) * w + xlo + kx - pad,
                    size_t(xhi - xlo));
          }
          gw[((size_t(co) * l.c_in + ci) * kk + ky) * kk + kx] += gscale * acc;
        }
      }
    }
  }
}

}  // namespace

namespace detail {
void set_conv_chunk_rows(int rows) { g_chunk_rows_override = rows; }
}  // namespace detail

Tensor4 conv2d_forward(const Tensor4& x, const ConvLayer& layer) {
  if (x.c != layer.c_in) throw DataError("conv2d_forward: channel mismatch");
  Tensor4 out(x.n, layer.c_out, x.h, x.w);
  const size_t hw = x.plane();

  if (layer.k == 1) {
    // pointwise: one GEMM per image, no patch panel needed
    for (int in = 0; in < x.n; ++in) {
      k::gemm_nn(size_t(layer.c_out), hw, size_t(layer.c_in), layer.weights.data(),
                 layer.taps(), x.image(in), hw, out.image(in), hw, 0.0);
      for (int co = 0; co < layer.c_out; ++co) {
        double* oc = out.channel(in, co);
        const double b = layer.bias[size_t(co)];
        for (size_t i = 0; i < hw; ++i) oc[i] += b;
      }
    }
    return out;
  }

  if (layer.c_out < 8) {
    for (int in = 0; in < x.n; ++in) conv_direct_fwd(x, layer, out, in);
    return out;
  }

  const int chunk = chunk_rows_for(layer, x.w);
  std::vector<double> panel;
  for (int in = 0; in < x.n; ++in) {
    for (int y0 = 0; y0 < x.h; y0 += chunk) {
      const int rows = std::min(chunk, x.h - y0);
      im2col_chunk(x, in, layer, y0, rows, panel);
      const size_t cols = size_t(rows) * x.w;
      k::gemm_nn(size_t(layer.c_out), cols, layer.taps(), layer.weights.data(), layer.taps(),
                 panel.data(), cols, out.image(in) + size_t(y0) * x.w, hw, 0.0);
    }
    for (int co = 0; co < layer.c_out; ++co) {
      double* oc = out.channel(in, co);
      const double b = layer.bias[size_t(co)];
      for (size_t i = 0; i < hw; ++i) oc[i] += b;
    }
  }
  return out;
}

Tensor4 conv2d_backward_acc(const Tensor4& x, const ConvLayer& layer, const Tensor4& grad_out,
                            double gscale, std::vector<double>& grad_weights,
                            std::vector<double>& grad_bias) {
  if (x.c != layer.c_in || grad_out.c != layer.c_out || grad_out.h != x.h ||
      grad_out.w != x.w || grad_out.n != x.n)
    throw DataError("conv2d_backward: shape mismatch");
  if (grad_weights.size() != layer.weights.size() || grad_bias.size() != layer.bias.size())
    throw DataError("conv2d_backward: gradient buffer shape mismatch");

  Tensor4 gx(x.n, x.c, x.h, x.w);
  const size_t hw = x.plane();

  if (layer.k == 1) {
    std::vector<double> wt(layer.taps() * size_t(layer.c_out));
    for (int co = 0; co < layer.c_out; ++co)
      for (int ci = 0; ci < layer.c_in; ++ci)
        wt[size_t(ci) * layer.c_out + co] = layer.weights[size_t(co) * layer.c_in + ci];
    std::vector<double> gw_local(layer.weights.size(), 0.0);
    for (int in = 0; in < x.n; ++in) {
      for (int co = 0; co < layer.c_out; ++co)
        grad_bias[size_t(co)] += gscale * k::sum(grad_out.channel(in, co), hw);
      k::gemm_nt(size_t(layer.c_out), size_t(layer.c_in), hw, grad_out.image(in), hw,
                 x.image(in), hw, gw_local.data(), size_t(layer.c_in), in == 0 ? 0.0 : 1.0);
      k::gemm_nn(size_t(layer.c_in), hw, size_t(layer.c_out), wt.data(), size_t(layer.c_out),
                 grad_out.image(in), hw, gx.image(in), hw, 0.0);
    }
    k::axpy(gscale, gw_local.data(), grad_weights.data(), gw_local.size());
    return gx;
  }

  if (layer.c_out < 8) {
    for (int in = 0; in < x.n; ++in)
      conv_direct_bwd(x, layer, grad_out, in, gx, gscale, grad_weights, grad_bias);
    return gx;
  }

  const int chunk = chunk_rows_for(layer, x.w);
  std::vector<double> panel, gpanel;
  std::vector<double> wt(layer.taps() * size_t(layer.c_out));
  for (int co = 0; co < layer.c_out; ++co)
    for (size_t t = 0; t < layer.taps(); ++t)
      wt[t * size_t(layer.c_out) + co] = layer.weights[size_t(co) * layer.taps() + t];

  std::vector<double> gw_local(layer.weights.size(), 0.0);
  bool first = true;
  for (int in = 0; in < x.n; ++in) {
    for (int co = 0; co < layer.c_out; ++co)
      grad_bias[size_t(co)] += gscale * k::sum(grad_out.channel(in, co), hw);
    for (int y0 = 0; y0 < x.h; y0 += chunk) {
      const int rows = std::min(chunk, x.h - y0);
      const size_t cols = size_t(rows) * x.w;
      im2col_chunk(x, in, layer, y0, rows, panel);
      // dL/dW += GO_chunk * P^T
      k::gemm_nt(size_t(layer.c_out), layer.taps(), cols, grad_out.image(in) + size_t(y0) * x.w,
                 hw, panel.data(), cols, gw_local.data(), layer.taps(), first ? 0.0 : 1.0);
      first = false;
      // dL/dP = W^T * GO_chunk, then scatter back
      gpanel.assign(layer.taps() * cols, 0.0);
      k::gemm_nn(layer.taps(), cols, size_t(layer.c_out), wt.data(), size_t(layer.c_out),
                 grad_out.image(in) + size_t(y0) * x.w, hw, gpanel.data(), cols, 0.0);
      col2im_chunk_add(gpanel, layer, y0, rows, gx, in);
    }
  }
  k::axpy(gscale, gw_local.data(), grad_weights.data(), gw_local.size());
  return gx;
}

ConvGrads conv2d_backward(const Tensor4& x, const ConvLayer& layer, const Tensor4& grad_out) {
  ConvGrads g;
  g.grad_weights.assign(layer.weights.size(), 0.0);
  g.grad_bias.assign(layer.bias.size(), 0.0);
  g.grad_x = conv2d_backward_acc(x, layer, grad_out, 1.0, g.grad_weights, g.grad_bias);
  return g;
}

Tensor4 relu_forward(const Tensor4& x) {
  Tensor4 out(x.n, x.c, x.h, x.w);
  k::relu_fwd(x.data.data(), out.data.data(), x.numel());
  return out;
}

Tensor4 relu_backward(const Tensor4& x, const Tensor4& grad_out) {
  if (!x.same_shape(grad_out)) throw DataError("relu_backward: shape mismatch");
  Tensor4 gx(x.n, x.c, x.h, x.w);
  k::relu_bwd(x.data.data(), grad_out.data.data(), gx.data.data(), x.numel());
  return gx;
}

std::pair<double, Tensor4> mse_loss(const Tensor4& a, const Tensor4& b) {
  if (!a.same_shape(b)) throw DataError("mse_loss: shape mismatch");
  Tensor4 grad(a.n, a.c, a.h, a.w);
  k::vsub(a.data.data(), b.data.data(), grad.data.data(), a.numel());
  const double loss = k::sumsq(grad.data.data(), a.numel()) / double(a.numel());
  k::scale(grad.data.data(), 2.0 / double(a.numel()), a.numel());
  return {loss, std::move(grad)};
}

double mse_value(const Tensor4& a, const Tensor4& b) {
  if (!a.same_shape(b)) throw DataError("mse_loss: shape mismatch");
  std::vector<double> d(a.numel());
  k::vsub(a.data.data(), b.data.data(), d.data(), a.numel());
  return k::sumsq(d.data(), a.numel()) / double(a.numel());
}

}  // namespace episim::nn
