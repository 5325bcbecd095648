#pragma once

#include <complex>
#include <cstddef>

namespace episim::kernels {

/// Instruction-set lane the hot loops run on. Detected at first use from
/// CPUID; override with force_isa() or the EPISIM_SIMD env var
/// (values: "scalar", "avx2", "auto"). Scalar is the reference
/// implementation every other lane is equivalence-tested against.
enum class Isa { Scalar, Avx2 };

Isa active_isa();
void force_isa(Isa isa);
const char* isa_name(Isa isa);
bool cpu_has_avx2();

// f64 primitives. All loops are single-threaded with a fixed summation
// order per lane, so results are reproducible for a fixed lane.

double dot(const double* a, const double* b, size_t n);
double sum(const double* x, size_t n);
double sumsq(const double* x, size_t n);

/// y += a * x
void axpy(double a, const double* x, double* y, size_t n);
void scale(double* x, double a, size_t n);
void vadd(const double* a, const double* b, double* out, size_t n);
void vsub(const double* a, const double* b, double* out, size_t n);

void relu_fwd(const double* x, double* y, size_t n);
/// gx = g where x > 0, else 0 (derivative at 0 taken as 0).
void relu_bwd(const double* x, const double* g, double* gx, size_t n);

/// Bias-corrected Adam step on one parameter block.
/// m = b1*m + (1-b1)*g; v = b2*v + (1-b2)*g^2;
/// p -= lr * (m*bc1) / (sqrt(v*bc2) + eps), bc = 1/(1 - beta^t).
void adam_update(double* p, double* m, double* v, const double* g, size_t n,
                 double lr, double b1, double b2, double eps, double bc1, double bc2);

/// Row-major C[MxN] = A[MxK] * B[KxN] + beta*C.
void gemm_nn(size_t M, size_t N, size_t K, const double* A, size_t lda,
             const double* B, size_t ldb, double* C, size_t ldc, double beta);

/// Row-major C[MxN] = A[MxK] * B[NxK]^T + beta*C  (inner-product form).
void gemm_nt(size_t M, size_t N, size_t K, const double* A, size_t lda,
             const double* B, size_t ldb, double* C, size_t ldc, double beta);

/// z[i] *= exp(+j*theta[i]) (or the conjugate phasor when conj is set).
void phase_mul(std::complex<double>* z, const double* theta, size_t n, bool conj);

/// Function table one lane implements; exposed so tests can drive a specific
/// lane directly.
struct Ops {
  double (*dot)(const double*, const double*, size_t);
  double (*sum)(const double*, size_t);
  double (*sumsq)(const double*, size_t);
  void (*axpy)(double, const double*, double*, size_t);
  void (*scale)(double*, double, size_t);
  void (*vadd)(const double*, const double*, double*, size_t);
  void (*vsub)(const double*, const double*, double*, size_t);
  void (*relu_fwd)(const double*, double*, size_t);
  void (*relu_bwd)(const double*, const double*, double*, size_t);
  void (*adam_update)(double*, double*, double*, const double*, size_t, double,
                      double, double, double, double, double);
  void (*gemm_nn)(size_t, size_t, size_t, const double*, size_t, const double*,
                  size_t, double*, size_t, double);
  void (*gemm_nt)(size_t, size_t, size_t, const double*, size_t, const double*,
                  size_t, double*, size_t, double);
  void (*phase_mul)(std::complex<double>*, const double*, size_t, bool);
};

const Ops& ops_for(Isa isa);

}  // namespace episim::kernels
