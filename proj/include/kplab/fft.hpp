#pragma once

#include <complex>
#include <vector>

namespace kplab::fft {

using cplx = std::complex<double>;

// Unnormalized complex DFT over a row-major array whose last dimension varies fastest.
// sign = -1 is the forward transform sum u e^{-i k x}, sign = +1 the backward one.
// Plans are cached process-wide (FFTW_ESTIMATE, so results are reproducible) and the
// planner is serialized; execution is safe from multiple threads.
void transform(const std::vector<int>& dims, int sign, const cplx* in, cplx* out);

inline void transform(const std::vector<int>& dims, int sign, std::vector<cplx>& data) {
  transform(dims, sign, data.data(), data.data());
}

}  // namespace kplab::fft
