#pragma once

#include "forge/core.hpp"

#include <filesystem>

namespace forge {

/// Reads an uncompressed single-file NIfTI-1 volume (uint8, int16 or float32,
/// three dimensions) or a directory of equally sized PNG/PGM slices stacked in
/// filename order. NIfTI intensities are scaled by scl_slope/scl_inter when
/// the slope is nonzero; slice intensities are returned as stored.
Volume3D load_volume(const std::filesystem::path& path);

enum class NiftiType { UInt8, Int16, Float32 };

/// Writes a little-endian single-file NIfTI-1 volume. Values are rounded and
/// saturated for the integer types.
void save_volume(const Volume3D& vol, const std::filesystem::path& path,
                 NiftiType type = NiftiType::Float32);

/// 16-bit grayscale PNG; intensities are clamped to [0, 1] and mapped to
/// [0, 65535] by rounding.
void save_image(const Image2D& img, const std::filesystem::path& path);

/// Reads an 8/16-bit grayscale PNG or a P2/P5 PGM, scaled to [0, 1].
Image2D load_image(const std::filesystem::path& path);

/// Rounds to the 16-bit grid that save_image writes, so that
/// load_image(save_image(x)) == quantize16(x) exactly.
Image2D quantize16(const Image2D& img);

}  // namespace forge
