#include "forge/ripplegen.hpp"

#include <cmath>
#include <numbers>

namespace forge {

void validate(const RippleParams& p) {
  if (!(p.amp >= 0.0 && p.amp < 1.0)) throw Error("ripple amp must lie in [0, 1)");
  if (!(p.r_inner > 0.0 && p.r_inner < p.r_outer)) throw Error("ripple needs 0 < r_inner < r_outer");
  if (!(p.freq > 0.0)) throw Error("ripple freq must be positive");
  if (!(p.ax_ratio >= 0.5 && p.ax_ratio <= 2.0)) throw Error("ripple ax_ratio must lie in [0.5, 2]");
}

double elliptic_radius(double x, double y, const RippleParams& p) {
  const double theta = p.orientation * std::numbers::pi / 180.0;
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  const double dx = x - p.cx;
  const double dy = y - p.cy;
  const double xr = c * dx + s * dy;
  const double yr = -s * dx + c * dy;
  return std::hypot(xr, yr / p.ax_ratio);
}

Image2D ripple_field(Eigen::Index width, Eigen::Index height, const RippleParams& p) {
  validate(p);
  Image2D field = Image2D::Ones(height, width);
  if (p.amp == 0.0) return field;
  const double band = p.r_outer - p.r_inner;
  for (Eigen::Index y = 0; y < height; ++y) {
    for (Eigen::Index x = 0; x < width; ++x) {
      const double rho = elliptic_radius(static_cast<double>(x), static_cast<double>(y), p);
      if (rho < p.r_inner || rho > p.r_outer) continue;
      const double wave = std::sin(2.0 * std::numbers::pi * p.freq * rho + p.wave_phase);
      const double hump = p.amp * std::sin(std::numbers::pi * (rho - p.r_inner) / band);
      field(y, x) = 1.0 + hump * wave;
    }
  }
  return field;
}

Image2D gen_ripple_artifact_image(const Image2D& img, const RippleParams& p) {
  return img * ripple_field(img.cols(), img.rows(), p);
}

RippleParams sample_ripple_params(Rng& rng, Eigen::Index width, Eigen::Index height,
                                  const RippleSampling& ranges) {
  const double w = static_cast<double>(width);
  const double h = static_cast<double>(height);
  RippleParams p;
  p.cx = rng.uniform(ranges.center_margin * w, (1.0 - ranges.center_margin) * w);
  p.cy = rng.uniform(ranges.center_margin * h, (1.0 - ranges.center_margin) * h);
  p.ax_ratio = rng.uniform(ranges.ax_ratio_min, ranges.ax_ratio_max);
  p.orientation = rng.uniform(0.0, 180.0);
  p.freq = rng.uniform(ranges.freq_min, ranges.freq_max);
  p.wave_phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
  p.amp = rng.uniform(ranges.amp_min, ranges.amp_max);
  p.r_inner = rng.uniform(ranges.r_inner_min, ranges.r_inner_max);
  p.r_outer = p.r_inner + rng.uniform(ranges.width_min, ranges.width_max);
  return p;
}

}  // namespace forge
