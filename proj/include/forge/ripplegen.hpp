#pragma once

#include "forge/core.hpp"
#include "forge/random.hpp"

namespace forge {

/// Elliptic ripple: a sine wave S radiating from (cx, cy), windowed by a
/// half-sine hump M between r_inner and r_outer. Intensities are multiplied
/// by 1 + M * S.
struct RippleParams {
  double cx = 0.0;
  double cy = 0.0;
  double ax_ratio = 1.0;     // minor/major axis ratio b/a
  double orientation = 0.0;  // degrees
  double freq = 0.1;         // cycles per pixel along the elliptic radius
  double wave_phase = 0.0;   // radians
  double amp = 0.0;
  double r_inner = 10.0;
  double r_outer = 40.0;

  bool operator==(const RippleParams&) const = default;
};

/// Throws unless 0 <= amp < 1, 0 < r_inner < r_outer, freq > 0 and
/// 0.5 <= ax_ratio <= 2.
void validate(const RippleParams& p);

/// Elliptic radius of pixel (x, y): coordinates relative to the center are
/// rotated by -orientation and the minor axis is stretched by 1 / ax_ratio.
double elliptic_radius(double x, double y, const RippleParams& p);

/// The multiplicative field 1 + M * S, height x width.
Image2D ripple_field(Eigen::Index width, Eigen::Index height, const RippleParams& p);

/// img * ripple_field. Values may exceed 1.
Image2D gen_ripple_artifact_image(const Image2D& img, const RippleParams& p);

/// Sampling ranges for random ripples.
struct RippleSampling {
  double center_margin = 0.1;  // fraction of the frame excluded on each side
  double ax_ratio_min = 0.6, ax_ratio_max = 1.67;
  double freq_min = 0.05, freq_max = 0.20;
  double amp_min = 0.10, amp_max = 0.40;
  double r_inner_min = 10.0, r_inner_max = 40.0;
  double width_min = 20.0, width_max = 80.0;
};

RippleParams sample_ripple_params(Rng& rng, Eigen::Index width, Eigen::Index height,
                                  const RippleSampling& ranges = {});

}  // namespace forge
