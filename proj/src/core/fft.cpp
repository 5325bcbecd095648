#include "episim/core/fft.hpp"

#include <fftw3.h>

#include <cmath>
#include <map>
#include <mutex>
#include <vector>

namespace episim {

namespace {

// FFTW planner is not thread-safe; execution through fftw_execute_dft with
// per-call buffers is. Plans are created with FFTW_ESTIMATE | FFTW_UNALIGNED
// so they are deterministic and valid for any properly-sized buffer.
class PlanCache {
 public:
  fftw_plan get(int n, int sign) {
    std::lock_guard<std::mutex> lock(mu_);
    auto key = std::make_pair(n, sign);
    auto it = plans_.find(key);
    if (it != plans_.end()) return it->second;
    std::vector<fftw_complex> dummy(static_cast<size_t>(n));
    fftw_plan p = fftw_plan_dft_1d(n, dummy.data(), dummy.data(), sign,
                                   FFTW_ESTIMATE | FFTW_UNALIGNED);
    plans_.emplace(key, p);
    return p;
  }

 private:
  std::mutex mu_;
  std::map<std::pair<int, int>, fftw_plan> plans_;
};

PlanCache& cache() {
  static PlanCache c;
  return c;
}

// Centered transform: out = shift(FFT(unshift(in))). For even n the two
// shifts coincide (rotate by n/2); for odd n unshift rotates by ceil(n/2).
void centered_fft(const cplx* in, cplx* out, int n, bool inverse) {
  const int half = n / 2;          // fftshift amount
  const int uhalf = (n + 1) / 2;   // ifftshift amount
  std::vector<cplx> buf(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) buf[size_t(i)] = in[(i + uhalf) % n];

  fftw_plan p = cache().get(n, inverse ? FFTW_BACKWARD : FFTW_FORWARD);
  fftw_execute_dft(p, reinterpret_cast<fftw_complex*>(buf.data()),
                   reinterpret_cast<fftw_complex*>(buf.data()));

  const double scale = 1.0 / std::sqrt(double(n));
  for (int i = 0; i < n; ++i) out[size_t(i)] = buf[size_t((i + n - half) % n)] * scale;
}

}  // namespace

void fft_line(cplx* line, int n, bool inverse) {
  std::vector<cplx> out(static_cast<size_t>(n));
  centered_fft(line, out.data(), n, inverse);
  for (int i = 0; i < n; ++i) line[size_t(i)] = out[size_t(i)];
}

ComplexSlice fft_cols(const ComplexSlice& s, bool inverse) {
  if (!inverse && s.domain != Domain::Image)
    throw DataError("fft_cols forward expects an Image-domain slice");
  if (inverse && s.domain != Domain::HybridXKy)
    throw DataError("fft_cols inverse expects a HybridXKy-domain slice");

  ComplexSlice out = s;
  out.domain = inverse ? Domain::Image : Domain::HybridXKy;
  const int w = s.width, h = s.height;
  std::vector<cplx> col(static_cast<size_t>(h)), res(static_cast<size_t>(h));
  for (int x = 0; x < w; ++x) {
    for (int y = 0; y < h; ++y) col[size_t(y)] = s.at(x, y);
    centered_fft(col.data(), res.data(), h, inverse);
    for (int y = 0; y < h; ++y) out.at(x, y) = res[size_t(y)];
  }
  return out;
}

ComplexSlice fft_rows(const ComplexSlice& s, bool inverse) {
  if (!inverse && s.domain != Domain::HybridXKy)
    throw DataError("fft_rows forward expects a HybridXKy-domain slice");
  if (inverse && s.domain != Domain::KSpace)
    throw DataError("fft_rows inverse expects a KSpace-domain slice");

  ComplexSlice out = s;
  out.domain = inverse ? Domain::HybridXKy : Domain::KSpace;
  const int w = s.width, h = s.height;
  std::vector<cplx> res(static_cast<size_t>(w));
  for (int y = 0; y < h; ++y) {
    centered_fft(s.row(y), res.data(), w, inverse);
    for (int x = 0; x < w; ++x) out.at(x, y) = res[size_t(x)];
  }
  return out;
}

ComplexSlice fft2(const ComplexSlice& image) {
  return fft_rows(fft_cols(image, false), false);
}

ComplexSlice ifft2(const ComplexSlice& kspace) {
  return fft_cols(fft_rows(kspace, true), true);
}

}  // namespace episim
