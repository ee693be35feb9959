#pragma once

#include "forge/core.hpp"
#include "forge/random.hpp"

#include <vector>

namespace forge {

// ROI and box geometry uses area coordinates: pixel (x, y) covers the unit
// square [x, x+1) x [y, y+1) and its center is (x + 0.5, y + 0.5).

struct CircleROI {
  double cx = 0.0;
  double cy = 0.0;
  double r = 0.0;

  bool operator==(const CircleROI&) const = default;

  bool contains_pixel(Eigen::Index x, Eigen::Index y) const {
    const double dx = static_cast<double>(x) + 0.5 - cx;
    const double dy = static_cast<double>(y) + 0.5 - cy;
    return dx * dx + dy * dy <= r * r;
  }
};

/// Half-open integer box [x_min, x_max) x [y_min, y_max).
struct BBox {
  int x_min = 0;
  int y_min = 0;
  int x_max = 0;
  int y_max = 0;

  bool operator==(const BBox&) const = default;
  auto operator<=>(const BBox&) const = default;

  int width() const { return x_max - x_min; }
  int height() const { return y_max - y_min; }
  long area() const { return width() > 0 && height() > 0 ? static_cast<long>(width()) * height() : 0L; }
  bool valid() const { return x_min < x_max && y_min < y_max; }
  bool contains(Eigen::Index x, Eigen::Index y) const {
    return x >= x_min && x < x_max && y >= y_min && y < y_max;
  }
};

/// Otsu threshold over 256 bins of [0, 1]. Returns the lower edge of the
/// first bin in the bright class; +infinity when the image has a single level.
double otsu_threshold(const Image2D& img);

/// Pixels at or above the Otsu threshold.
Mask2D foreground_mask(const Image2D& img);

struct RoiSampling {
  int count_min = 2;
  int count_max = 6;
  double radius_min = 16.0;
  double radius_max = 48.0;
  double min_foreground_fraction = 0.5;
  int tries_per_roi = 200;
};

inline constexpr double kMinRoiRadius = 8.0;

/// Random circles lying inside the frame with at least half their pixels on
/// the foreground mask. On frames smaller than 96 px the radius range is
/// scaled by width / 256 (never below 8 px). ROIs may overlap. Throws
/// "no foreground" when none can be placed.
std::vector<CircleROI> sample_rois(Rng& rng, const Image2D& img, const RoiSampling& cfg = {});

/// Pixels covered by at least one ROI. With feather > 0 the result is a
/// soft weight rising linearly over `feather` pixels inside each edge.
Image2D roi_weight(Eigen::Index width, Eigen::Index height, const std::vector<CircleROI>& rois,
                   double feather = 0.0);

/// Clean outside the ROI union, artifact inside, clipped to [0, 1].
Image2D composite(const Image2D& clean, const Image2D& artifact, const std::vector<CircleROI>& rois,
                  double feather = 0.0);

/// Maps src onto ref's intensity distribution with a 256-bin CDF lookup.
/// Bin i holds intensities rounding to i / 255; a source bin maps to the
/// first reference bin whose cumulative count reaches its own.
Image2D histogram_match(const Image2D& src, const Image2D& ref);

/// Circumscribing square of each ROI, clipped to the frame. Boxes that clip
/// to nothing are dropped.
std::vector<BBox> rois_to_bboxes(const std::vector<CircleROI>& rois, Eigen::Index width,
                                 Eigen::Index height);

}  // namespace forge
