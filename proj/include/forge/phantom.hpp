#pragma once

#include "forge/core.hpp"

#include <cstdint>

namespace forge {

/// Tissue noise standard deviation, relative to white matter near 0.86.
inline constexpr double kPhantomNoise = 0.03;

/// Synthetic T1-like head: scalp, skull, CSF, folded cortex, white matter and
/// ventricles, with mild voxel noise. Intensities span roughly [0, 1000].
Volume3D make_brain_phantom(Eigen::Index nx, Eigen::Index ny, Eigen::Index nz, std::uint64_t seed = 0,
                            double noise_sigma = kPhantomNoise);

/// Normalized axial plane through a phantom of the given in-plane size,
/// `level` in [-1, 1] selecting the height.
Image2D brain_phantom_slice(Eigen::Index width, Eigen::Index height, double level = 0.1,
                            std::uint64_t seed = 0, double noise_sigma = kPhantomNoise);

}  // namespace forge
