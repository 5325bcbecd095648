#include "episim/cal/psf.hpp"

#include <algorithm>
#include <cmath>

namespace episim::cal {

namespace {

double phi(double t) { return 0.5 * (1.0 + std::erf(t / std::sqrt(2.0))); }

struct LinFit {
  double a = 0.0, b = 0.0, sse = 0.0;
};

// closed-form least squares for I ~ a + b*phi at fixed (x0, sigma)
LinFit solve_ab(const std::vector<double>& y, double x0, double sigma) {
  const size_t n = y.size();
  double sp = 0.0, spp = 0.0, sy = 0.0, spy = 0.0;
  for (size_t i = 0; i < n; ++i) {
    const double p = phi((double(i) - x0) / sigma);
    sp += p;
    spp += p * p;
    sy += y[i];
    spy += p * y[i];
  }
  const double det = double(n) * spp - sp * sp;
  LinFit f;
  if (std::abs(det) < 1e-12) {
    f.a = sy / double(n);
    f.b = 0.0;
  } else {
    f.b = (double(n) * spy - sp * sy) / det;
    f.a = (sy - f.b * sp) / double(n);
  }
  f.sse = 0.0;
  for (size_t i = 0; i < n; ++i) {
    const double e = y[i] - (f.a + f.b * phi((double(i) - x0) / sigma));
    f.sse += e * e;
  }
  return f;
}

double golden(double lo, double hi, const std::function<double(double)>& cost) {
  const double gr = 0.6180339887498949;
  double a = hi - gr * (hi - lo), b = lo + gr * (hi - lo);
  double fa = cost(a), fb = cost(b);
  for (int it = 0; it < 80; ++it) {
    if (fa < fb) {
      hi = b;
      b = a;
      fb = fa;
      a = hi - gr * (hi - lo);
      fa = cost(a);
    } else {
      lo = a;
      a = b;
      fa = fb;
      b = lo + gr * (hi - lo);
      fb = cost(b);
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace

PsfEstimate estimate_psf_sigma(const std::vector<double>& profile) {
  const size_t n = profile.size();
  if (n < 8) throw ConfigError("edge profile must have at least 8 samples");

  double mean = 0.0;
  for (double v : profile) mean += v;
  mean /= double(n);
  double var = 0.0;
  for (double v : profile) var += (v - mean) * (v - mean);

  // coarse grid
  double best_sse = std::numeric_limits<double>::infinity();
  double best_x0 = double(n) / 2, best_sigma = 1.0;
  for (double x0 = 0.5; x0 < double(n) - 0.5; x0 += 0.25) {
    for (double sigma : {0.05, 0.1, 0.2, 0.35, 0.5, 0.75, 1.0, 1.5, 2.5, 4.0, double(n) / 4.0}) {
      const auto f = solve_ab(profile, x0, sigma);
      if (f.sse < best_sse) {
        best_sse = f.sse;
        best_x0 = x0;
        best_sigma = sigma;
      }
    }
  }

  // alternating golden-section refinement
  for (int round = 0; round < 4; ++round) {
    best_x0 = golden(std::max(0.0, best_x0 - 1.0), std::min(double(n - 1), best_x0 + 1.0),
                     [&](double x0) { return solve_ab(profile, x0, best_sigma).sse; });
    best_sigma = golden(std::max(1e-3, best_sigma * 0.25), best_sigma * 4.0,
                        [&](double s) { return solve_ab(profile, best_x0, s).sse; });
  }

  const auto f = solve_ab(profile, best_x0, best_sigma);
  PsfEstimate est;
  est.sigma = best_sigma;
  est.edge_center = best_x0;
  est.low = std::min(f.a, f.a + f.b);
  est.high = std::max(f.a, f.a + f.b);
  est.fit_residual = f.sse;
  if (var <= 0.0 || f.sse > 0.5 * var)
    throw NumericalError("edge profile has no reliable erf-shaped transition");
  return est;
}

}  // namespace episim::cal
