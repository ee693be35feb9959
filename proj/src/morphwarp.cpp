#include "forge/morphwarp.hpp"

#include <cmath>
#include <limits>

namespace forge {
namespace {

constexpr int kTriesPerCircle = 100;
constexpr int kRestarts = 20;
constexpr std::size_t kMandatoryCircles = 3;

}  // namespace

std::vector<WarpCircle> place_circles(Rng& rng, Eigen::Index width, Eigen::Index height,
                                      double epsilon) {
  if (width < 32 || height < 32)
    throw Error("image too small to place circles: " + std::to_string(width) + "x" +
                std::to_string(height) + " (need at least 32x32)");
  const double xmax = static_cast<double>(width - 1);
  const double ymax = static_cast<double>(height - 1);
  const auto count = static_cast<std::size_t>(rng.uniform_int(3, 8));

  // Radii are maximal, so an unlucky large first circle can crowd out the
  // mandatory ones; those cases start over from scratch.
  for (int restart = 0; restart < kRestarts; ++restart) {
    std::vector<WarpCircle> circles;
    while (circles.size() < count) {
      bool placed = false;
      for (int attempt = 0; attempt < kTriesPerCircle && !placed; ++attempt) {
        const double cx = rng.uniform(0.0, xmax);
        const double cy = rng.uniform(0.0, ymax);
        double r = std::min({cx, cy, xmax - cx, ymax - cy});
        for (const WarpCircle& c : circles) r = std::min(r, std::hypot(cx - c.cx, cy - c.cy) - c.r);
        if (r >= kMinWarpRadius) {
          circles.push_back({cx, cy, r, epsilon});
          placed = true;
        }
      }
      if (!placed) break;
    }
    if (circles.size() >= kMandatoryCircles) return circles;
  }
  throw Error("image too small to place circles: " + std::to_string(width) + "x" + std::to_string(height));
}

Image2D warp_image(const Image2D& img, const std::vector<WarpCircle>& circles) {
  for (std::size_t i = 0; i < circles.size(); ++i) {
    if (!(circles[i].r > 0.0) || circles[i].epsilon < 0.0)
      throw Error("warp circle " + std::to_string(i) + " needs r > 0 and epsilon >= 0");
    for (std::size_t j = i + 1; j < circles.size(); ++j) {
      const double d = std::hypot(circles[i].cx - circles[j].cx, circles[i].cy - circles[j].cy);
      if (d < circles[i].r + circles[j].r - 1e-9)
        throw Error("warp circles " + std::to_string(i) + " and " + std::to_string(j) + " overlap");
    }
  }

  Image2D out = img;
  const Eigen::Index w = img.cols();
  const Eigen::Index h = img.rows();
  for (const WarpCircle& c : circles) {
    const auto x0 = std::max<Eigen::Index>(0, static_cast<Eigen::Index>(std::ceil(c.cx - c.r)));
    const auto x1 = std::min<Eigen::Index>(w - 1, static_cast<Eigen::Index>(std::floor(c.cx + c.r)));
    const auto y0 = std::max<Eigen::Index>(0, static_cast<Eigen::Index>(std::ceil(c.cy - c.r)));
    const auto y1 = std::min<Eigen::Index>(h - 1, static_cast<Eigen::Index>(std::floor(c.cy + c.r)));
    for (Eigen::Index y = y0; y <= y1; ++y) {
      for (Eigen::Index x = x0; x <= x1; ++x) {
        const double dx = static_cast<double>(x) - c.cx;
        const double dy = static_cast<double>(y) - c.cy;
        const double u = std::hypot(dx, dy) / c.r;
        if (u >= 1.0) continue;
        // Source offset is (P - C) scaled by u^epsilon, i.e. radius u^(1+epsilon) * R.
        const double scale = u > 0.0 ? std::pow(u, c.epsilon) : 0.0;
        out(y, x) = bilinear_sample(img, c.cx + scale * dx, c.cy + scale * dy);
      }
    }
  }
  return out;
}

}  // namespace forge
