#include <cmath>

#include "episim/kernels/kernels.hpp"

// Reference lane. Plain loops, no tricks; the SIMD lanes are tested for
// equivalence against exactly this.

namespace episim::kernels::scalar {

double dot(const double* a, const double* b, size_t n) {
  double acc = 0.0;
  for (size_t i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

double sum(const double* x, size_t n) {
  double acc = 0.0;
  for (size_t i = 0; i < n; ++i) acc += x[i];
  return acc;
}

double sumsq(const double* x, size_t n) {
  double acc = 0.0;
  for (size_t i = 0; i < n; ++i) acc += x[i] * x[i];
  return acc;
}

void axpy(double a, const double* x, double* y, size_t n) {
  for (size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void scale(double* x, double a, size_t n) {
  for (size_t i = 0; i < n; ++i) x[i] *= a;
}

void vadd(const double* a, const double* b, double* out, size_t n) {
  for (size_t i = 0; i < n; ++i) out[i] = a[i] + b[i];
}

void vsub(const double* a, const double* b, double* out, size_t n) {
  for (size_t i = 0; i < n; ++i) out[i] = a[i] - b[i];
}

void relu_fwd(const double* x, double* y, size_t n) {
  for (size_t i = 0; i < n; ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
}

void relu_bwd(const double* x, const double* g, double* gx, size_t n) {
  for (size_t i = 0; i < n; ++i) gx[i] = x[i] > 0.0 ? g[i] : 0.0;
}

void adam_update(double* p, double* m, double* v, const double* g, size_t n,
                 double lr, double b1, double b2, double eps, double bc1, double bc2) {
  for (size_t i = 0; i < n; ++i) {
    m[i] = b1 * m[i] + (1.0 - b1) * g[i];
    v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
    p[i] -= lr * (m[i] * bc1) / (std::sqrt(v[i] * bc2) + eps);
  }
}

void gemm_nn(size_t M, size_t N, size_t K, const double* A, size_t lda,
             const double* B, size_t ldb, double* C, size_t ldc, double beta) {
  for (size_t i = 0; i < M; ++i) {
    double* c = C + i * ldc;
    if (beta == 0.0) {
      for (size_t j = 0; j < N; ++j) c[j] = 0.0;
    } else if (beta != 1.0) {
      for (size_t j = 0; j < N; ++j) c[j] *= beta;
    }
    for (size_t k = 0; k < K; ++k) {
      const double a = A[i * lda + k];
      const double* b = B + k * ldb;
      for (size_t j = 0; j < N; ++j) c[j] += a * b[j];
    }
  }
}

void gemm_nt(size_t M, size_t N, size_t K, const double* A, size_t lda,
             const double* B, size_t ldb, double* C, size_t ldc, double beta) {
  for (size_t i = 0; i < M; ++i) {
    for (size_t j = 0; j < N; ++j) {
      double acc = 0.0;
      const double* a = A + i * lda;
      const double* b = B + j * ldb;
      for (size_t k = 0; k < K; ++k) acc += a[k] * b[k];
      const double prev = beta == 0.0 ? 0.0 : beta * C[i * ldc + j];
      C[i * ldc + j] = prev + acc;
    }
  }
}

void phase_mul(std::complex<double>* z, const double* theta, size_t n, bool conj) {
  for (size_t i = 0; i < n; ++i) {
    const double c = std::cos(theta[i]);
    const double s = conj ? -std::sin(theta[i]) : std::sin(theta[i]);
    const double re = z[i].real(), im = z[i].imag();
    z[i] = {re * c - im * s, re * s + im * c};
  }
}

extern const Ops kOps;
const Ops kOps = {dot,      sum,      sumsq,      axpy,        scale,
                  vadd,     vsub,     relu_fwd,   relu_bwd,    adam_update,
                  gemm_nn,  gemm_nt,  phase_mul};

}  // namespace episim::kernels::scalar
