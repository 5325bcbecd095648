#pragma once

#include "episim/core/slice.hpp"

namespace episim::cal {

/// Separable Gaussian convolution. Kernel truncated at 4*sigma and
/// renormalized; reflective border handling. sigma == 0 is the identity.
RealSlice gaussian_blur(const RealSlice& s, double sigma);
ComplexSlice gaussian_blur(const ComplexSlice& s, double sigma);

/// The discrete kernel itself (odd length 2*ceil(4*sigma)+1, normalized).
std::vector<double> gaussian_kernel(double sigma);

}  // namespace episim::cal
