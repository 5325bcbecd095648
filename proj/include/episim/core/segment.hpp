#pragma once

#include "episim/core/slice.hpp"

namespace episim {

/// Threshold at intensity > threshold, then morphological closing with a
/// square structuring element of half-width closing_radius.
Mask segment_object(const RealSlice& s, double threshold, int closing_radius);

Mask dilate_square(const Mask& m, int radius);
Mask erode_square(const Mask& m, int radius);

/// Logical complement.
Mask invert(const Mask& m);

}  // namespace episim
