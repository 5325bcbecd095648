#include <atomic>
#include <cstdlib>
#include <cstring>

#include "episim/kernels/kernels.hpp"

namespace episim::kernels {

namespace scalar {
extern const Ops kOps;
}

#if defined(__x86_64__) || defined(_M_X64)
#define EPISIM_X86 1
namespace avx2 {
extern const Ops kOps;
}
#else
#define EPISIM_X86 0
#endif

namespace {

bool detect_avx2() {
#if EPISIM_X86 && (defined(__GNUC__) || defined(__clang__))
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

Isa initial_isa() {
  const char* env = std::getenv("EPISIM_SIMD");
  if (env != nullptr) {
    if (std::strcmp(env, "scalar") == 0) return Isa::Scalar;
    if (std::strcmp(env, "avx2") == 0) return detect_avx2() ? Isa::Avx2 : Isa::Scalar;
    // anything else (incl. "auto") falls through to detection
  }
  return detect_avx2() ? Isa::Avx2 : Isa::Scalar;
}

std::atomic<Isa> g_isa{initial_isa()};

}  // namespace

bool cpu_has_avx2() { return detect_avx2(); }

Isa active_isa() { return g_isa.load(std::memory_order_relaxed); }

void force_isa(Isa isa) {
  if (isa == Isa::Avx2 && !detect_avx2()) isa = Isa::Scalar;
  g_isa.store(isa, std::memory_order_relaxed);
}

const char* isa_name(Isa isa) {
  switch (isa) {
    case Isa::Scalar: return "scalar";
    case Isa::Avx2: return "avx2";
  }
  return "?";
}

const Ops& ops_for(Isa isa) {
#if EPISIM_X86
  if (isa == Isa::Avx2) return avx2::kOps;
#endif
  (void)isa;
  return scalar::kOps;
}

namespace {
inline const Ops& active() { return ops_for(active_isa()); }
}

double dot(const double* a, const double* b, size_t n) { return active().dot(a, b, n); }
double sum(const double* x, size_t n) { return active().sum(x, n); }
double sumsq(const double* x, size_t n) { return active().sumsq(x, n); }
void axpy(double a, const double* x, double* y, size_t n) { active().axpy(a, x, y, n); }
void scale(double* x, double a, size_t n) { active().scale(x, a, n); }
void vadd(const double* a, const double* b, double* out, size_t n) { active().vadd(a, b, out, n); }
void vsub(const double* a, const double* b, double* out, size_t n) { active().vsub(a, b, out, n); }
void relu_fwd(const double* x, double* y, size_t n) { active().relu_fwd(x, y, n); }
void relu_bwd(const double* x, const double* g, double* gx, size_t n) {
  active().relu_bwd(x, g, gx, n);
}
void adam_update(double* p, double* m, double* v, const double* g, size_t n, double lr,
                 double b1, double b2, double eps, double bc1, double bc2) {
  active().adam_update(p, m, v, g, n, lr, b1, b2, eps, bc1, bc2);
}
void gemm_nn(size_t M, size_t N, size_t K, const double* A, size_t lda, const double* B,
             size_t ldb, double* C, size_t ldc, double beta) {
  active().gemm_nn(M, N, K, A, lda, B, ldb, C, ldc, beta);
}
void gemm_nt(size_t M, size_t N, size_t K, const double* A, size_t lda, const double* B,
             size_t ldb, double* C, size_t ldc, double beta) {
  active().gemm_nt(M, N, K, A, lda, B, ldb, C, ldc, beta);
}
void phase_mul(std::complex<double>* z, const double* theta, size_t n, bool conj) {
  active().phase_mul(z, theta, n, conj);
}

}  // namespace episim::kernels
