#pragma once

// Thin FFTW wrapper shared by the quantum and transforms modules.  Plans are
// built once per shape with FFTW_ESTIMATE | FFTW_UNALIGNED and cached; only
// the planner is serialized, execution is reentrant.

#include <complex>
#include <vector>

namespace mlsl::spectral {

using cplx = std::complex<double>;

/// Full multi-dimensional DFT over a row-major array with the given extents.
/// sign = -1 forward, +1 backward; unnormalized.
void fft(cplx* data, const std::vector<int>& dims, int sign);

/// DFT along a single axis of a row-major array, all other axes batched.
void fft_axis(cplx* data, const std::vector<int>& dims, int axis, int sign);

/// Angular wavenumbers of an n-point periodic grid with period `length`.
std::vector<double> wavenumbers(int n, double length);

}  // namespace mlsl::spectral
