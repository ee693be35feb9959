#include "forge/phantom.hpp"

#include "forge/random.hpp"

#include <cmath>
#include <numbers>

namespace forge {
namespace {

// Tissue value at normalized coordinates in [-1, 1]^3 (x left-right,
// y posterior-anterior, z inferior-superior).
double tissue(double x, double y, double z) {
  const double s = std::sqrt((x / 0.78) * (x / 0.78) + (y / 0.92) * (y / 0.92) + (z / 0.84) * (z / 0.84));
  if (s > 1.0) return 0.0;
  const double azimuth = std::atan2(y, x);
  const double elevation = std::atan2(z, std::hypot(x, y));
  if (s > 0.955) return 0.7 + 0.2 * std::sin(60.0 * azimuth) * std::sin(40.0 * elevation);  // scalp
  if (s > 0.90) return s > 0.925 && s < 0.935 ? 0.45 : 0.06;  // skull with marrow line
  if (s > 0.86) return 0.2;  // CSF

  // Gyral folding: the gray/white boundary and the sulci both wander.
  const double fold = 0.07 * std::sin(9.0 * azimuth + 1.3) * std::cos(7.0 * elevation) +
                      0.05 * std::sin(23.0 * azimuth - 6.0 * elevation + 0.4) +
                      0.03 * std::sin(41.0 * azimuth + 13.0 * elevation);
  const double sulcus = std::sin(120.0 * azimuth + 9.0 * std::sin(5.0 * elevation) + 6.0 * s);
  if (s > 0.66 + fold) return sulcus > 0.3 ? 0.18 : 0.5;  // cortex
  if (sulcus > 0.93 && s > 0.52) return 0.5;                 // sulcal fundi reaching into white matter

  // Lateral ventricles.
  for (double side : {-1.0, 1.0}) {
    const double vx = (x - side * 0.12) / 0.08;
    const double vy = (y + 0.05) / 0.28;
    const double vz = (z - 0.05) / 0.12;
    if (vx * vx + vy * vy + vz * vz < 1.0) return 0.2;
  }
  // Deep gray nuclei.
  for (double side : {-1.0, 1.0}) {
    const double gx = (x - side * 0.25) / 0.1;
    const double gy = (y - 0.05) / 0.14;
    const double gz = (z + 0.08) / 0.12;
    if (gx * gx + gy * gy + gz * gz < 1.0) return 0.6;
  }
  // White matter with faint tract texture.
  return 0.86 + 0.04 * std::sin(31.0 * x + 17.0 * y) * std::sin(23.0 * z - 29.0 * y);
}

// Roughly Gaussian voxel noise with standard deviation `sigma`.
double noise(Rng& rng, double sigma) {
  return sigma * (rng.uniform() + rng.uniform() + rng.uniform() - 1.5) * 2.0;
}

double coord(Eigen::Index i, Eigen::Index n) {
  return n > 1 ? 2.0 * static_cast<double>(i) / static_cast<double>(n - 1) - 1.0 : 0.0;
}

}  // namespace

Volume3D make_brain_phantom(Eigen::Index nx, Eigen::Index ny, Eigen::Index nz, std::uint64_t seed,
                            double noise_sigma) {
  Volume3D vol(nx, ny, nz);
  Rng rng(derive_seed(seed, {0x7068616eULL}));
  for (Eigen::Index k = 0; k < nz; ++k)
    for (Eigen::Index j = 0; j < ny; ++j)
      for (Eigen::Index i = 0; i < nx; ++i) {
        const double v = tissue(coord(i, nx), coord(j, ny), coord(k, nz));
        vol(i, j, k) = 1000.0 * std::max(0.0, v + noise(rng, v > 0.0 ? noise_sigma : noise_sigma / 3.0));
      }
  return vol;
}

Image2D brain_phantom_slice(Eigen::Index width, Eigen::Index height, double level, std::uint64_t seed,
                            double noise_sigma) {
  Image2D img(height, width);
  Rng rng(derive_seed(seed, {0x736c6963ULL}));
  for (Eigen::Index y = 0; y < height; ++y)
    for (Eigen::Index x = 0; x < width; ++x) {
      const double v = tissue(coord(x, width), coord(y, height), level);
      img(y, x) = std::max(0.0, v + noise(rng, v > 0.0 ? noise_sigma : noise_sigma / 3.0));
    }
  return normalize(img);
}

}  // namespace forge
