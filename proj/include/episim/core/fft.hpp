#pragma once

#include "episim/core/slice.hpp"

namespace episim {

// Fixed global convention: centered (zero frequency at index n/2), unitary
// (1/sqrt(n) each way) transforms. Forward kernel sign is exp(-j*2*pi*k*n/N).
// fft_cols moves Image <-> HybridXKy, fft_rows moves HybridXKy <-> KSpace.

/// Transform every column independently (along Y).
ComplexSlice fft_cols(const ComplexSlice& s, bool inverse);

/// Transform every row independently (along X).
ComplexSlice fft_rows(const ComplexSlice& s, bool inverse);

/// In-place 1-D centered unitary transform of a raw line.
void fft_line(cplx* line, int n, bool inverse);

/// Image -> KSpace (cols then rows) and back, composition of the above.
ComplexSlice fft2(const ComplexSlice& image);
ComplexSlice ifft2(const ComplexSlice& kspace);

}  // namespace episim
