#pragma once

#include "forge/core.hpp"

namespace forge {

/// Unnormalized forward 2D DFT with the DC bin moved to (rows / 2, cols / 2).
Spectrum2D fft2_centered(const Image2D& img);

/// Inverse of fft2_centered, scaled by 1 / (W * H); returns the real part.
///
/// The spectrum must be Hermitian-symmetric to within 1e-6 of its largest
/// modulus, otherwise an Error naming the worst bin is thrown. The largest
/// discarded imaginary magnitude is written to `max_imag` when non-null.
/// Output values are not clipped.
Image2D ifft2_centered(const Spectrum2D& spec, double* max_imag = nullptr);

/// Index of the conjugate partner of centered bin `c` along an axis of length `n`.
inline Eigen::Index mirror_index(Eigen::Index c, Eigen::Index n) {
  return ((2 * (n / 2) - c) % n + n) % n;
}

/// Largest |F(-k) - conj(F(k))| over all bins, relative to max |F|.
/// Writes the offending (row, col) when the pointers are non-null.
double hermitian_defect(const Spectrum2D& spec, Eigen::Index* worst_row = nullptr,
                        Eigen::Index* worst_col = nullptr);

}  // namespace forge
