#pragma once

#include <complex>
#include <vector>

#include "amv/grid.hpp"

namespace amv {

/// In-place radix-2 complex FFT. Length must be a power of two.
/// inverse=true applies the unnormalized inverse; scaling by 1/n is the caller's job.
void fft_inplace(std::vector<std::complex<double>>& data, bool inverse);

/// 2-D complex FFT over a row-major grid buffer (rows x cols, both powers of two).
void fft2_inplace(std::vector<std::complex<double>>& data, const PixelGrid& grid,
                  bool inverse);

}  // namespace amv
