#pragma once

#include <complex>
#include <vector>

namespace axmag {

using cplx = std::complex<double>;

// Thin wrappers over FFTW (unnormalised: inverse(forward(x)) == n * x).
// Plan creation is serialised internally, execution is thread-safe.
void fft2d(std::vector<cplx>& data, int rows, int cols, bool inverse);
void fft1d(std::vector<cplx>& data, bool inverse);
/// `count` contiguous transforms of `length` points each.
void fft1d_many(std::vector<cplx>& data, int length, int count, bool inverse);

/// Signed frequency index of bin k in an n-point DFT.
inline int signed_bin(int k, int n) { return k <= (n - 1) / 2 ? k : k - n; }

}  // namespace axmag
