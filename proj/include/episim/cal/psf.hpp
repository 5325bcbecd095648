#pragma once

#include <vector>

#include "episim/core/errors.hpp"

namespace episim::cal {

struct PsfEstimate {
  double sigma = 0.0;
  double edge_center = 0.0;  // subpixel position of the transition
  double low = 0.0;          // plateau levels a and a+b
  double high = 0.0;
  double fit_residual = 0.0;  // sum of squared fit errors
};

/// Fit I(x) = a + b*Phi((x - x0)/sigma) to a 1-D edge profile, Phi being the
/// standard normal CDF. Derivative-free: coarse grid over (x0, sigma), then
/// alternating golden-section refinement, with (a, b) solved in closed form
/// at every candidate. Throws NumericalError when the residual exceeds half
/// the profile variance (no usable edge).
PsfEstimate estimate_psf_sigma(const std::vector<double>& profile);

}  // namespace episim::cal
