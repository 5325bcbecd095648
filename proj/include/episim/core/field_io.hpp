#pragma once

#include <string>

#include "episim/core/slice.hpp"

namespace episim {

// "Field format": raw little-endian sample file <stem>.raw plus a JSON
// sidecar <stem>.json with {width, height, slices, dtype, spacing_mm,
// slice_thickness_mm, domain}. dtype is one of f32/f64/c64/c128; complex
// samples are interleaved (re, im). Round trips are bit-exact for matching
// dtype.

void save_field(const std::string& stem, const Volume& v, bool f32 = false);
void save_field(const std::string& stem, const ComplexVolume& v, bool f32 = false);
void save_field(const std::string& stem, const RealSlice& s, bool f32 = false);
void save_field(const std::string& stem, const ComplexSlice& s, bool f32 = false);

Volume load_field_real(const std::string& stem);
ComplexVolume load_field_complex(const std::string& stem);

/// Peek at the sidecar to learn whether the payload is complex.
bool field_is_complex(const std::string& stem);

}  // namespace episim
