#pragma once

#include "forge/core.hpp"
#include "forge/random.hpp"

#include <cmath>
#include <vector>

namespace forge {

/// Circle inside which a radial stretch is applied. Coordinates are pixel
/// indices (pixel (x, y) sits at integer position (x, y)).
struct WarpCircle {
  double cx = 0.0;
  double cy = 0.0;
  double r = 0.0;
  double epsilon = 0.2;

  bool operator==(const WarpCircle&) const = default;
};

inline constexpr double kDefaultWarpEpsilon = 0.2;
inline constexpr double kMinWarpRadius = 8.0;

/// Places three to eight pairwise non-overlapping circles, each with the
/// largest radius that fits between the borders and the circles placed
/// before it. Throws if fewer than three can be placed.
std::vector<WarpCircle> place_circles(Rng& rng, Eigen::Index width, Eigen::Index height,
                                      double epsilon = kDefaultWarpEpsilon);

/// Distance from the circle center of the source point sampled for a
/// destination at normalized radius u in [0, 1], in units of the radius.
inline double warp_source_radius(double u, double epsilon) { return std::pow(u, 1.0 + epsilon); }

/// Backward-maps every pixel inside a circle: the destination at normalized
/// radius u pulls the bilinear sample at normalized radius u^(1+epsilon)
/// along the same ray. Pixels outside every circle are copied unchanged.
Image2D warp_image(const Image2D& img, const std::vector<WarpCircle>& circles);

}  // namespace forge
