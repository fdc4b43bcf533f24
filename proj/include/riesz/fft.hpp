#pragma once

#include <complex>
#include <vector>

namespace riesz {

using cplx = std::complex<double>;

/// In-place iterative radix-2 FFT; size must be a power of two.
void fft(std::vector<cplx>& a, bool inverse);

/// In-place 2D FFT on row-major data of size ny x nx (both powers of two).
void fft2(std::vector<cplx>& a, int nx, int ny, bool inverse);

bool is_pow2(int n);

} // namespace riesz
