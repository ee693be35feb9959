#include "forge/composit.hpp"

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>

namespace forge {
namespace {

constexpr int kOtsuBins = 256;

int otsu_bin(double v) {
  return std::clamp(static_cast<int>(std::floor(v * kOtsuBins)), 0, kOtsuBins - 1);
}

int match_bin(double v) { return std::clamp(static_cast<int>(std::lround(v * 255.0)), 0, 255); }

void require_same_shape(const Image2D& a, const Image2D& b, const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw Error(std::string(what) + ": dimension mismatch (" + std::to_string(a.cols()) + "x" +
                std::to_string(a.rows()) + " vs " + std::to_string(b.cols()) + "x" +
                std::to_string(b.rows()) + ")");
}

}  // namespace

double otsu_threshold(const Image2D& img) {
  std::array<double, kOtsuBins> hist{};
  for (Eigen::Index i = 0; i < img.size(); ++i) hist[otsu_bin(img.data()[i])] += 1.0;

  const double total = static_cast<double>(img.size());
  double sum_all = 0.0;
  for (int b = 0; b < kOtsuBins; ++b) sum_all += b * hist[b];

  double best = 0.0;
  int best_t = -1;
  double w0 = 0.0, sum0 = 0.0;
  for (int t = 1; t < kOtsuBins; ++t) {
    w0 += hist[t - 1];
    sum0 += (t - 1) * hist[t - 1];
    const double w1 = total - w0;
    if (w0 == 0.0 || w1 == 0.0) continue;
    const double diff = sum0 / w0 - (sum_all - sum0) / w1;
    const double between = w0 * w1 * diff * diff;
    if (between > best) {
      best = between;
      best_t = t;
    }
  }
  if (best_t < 0) return std::numeric_limits<double>::infinity();
  return static_cast<double>(best_t) / kOtsuBins;
}

Mask2D foreground_mask(const Image2D& img) {
  const double t = otsu_threshold(img);
  return img >= t;
}

std::vector<CircleROI> sample_rois(Rng& rng, const Image2D& img, const RoiSampling& cfg) {
  const Eigen::Index w = img.cols();
  const Eigen::Index h = img.rows();
  double rmin = cfg.radius_min;
  double rmax = cfg.radius_max;
  if (std::min(w, h) < 96) {
    const double s = static_cast<double>(w) / 256.0;
    rmin = std::max(kMinRoiRadius, rmin * s);
    rmax = std::max(kMinRoiRadius, rmax * s);
  }
  rmax = std::min(rmax, 0.5 * static_cast<double>(std::min(w, h)));
  rmin = std::min(rmin, rmax);
  if (rmax < kMinRoiRadius) throw Error("no foreground: frame too small for ROIs");

  const Mask2D mask = foreground_mask(img);
  const auto count = rng.uniform_int(cfg.count_min, cfg.count_max);

  std::vector<CircleROI> rois;
  for (std::int64_t n = 0; n < count; ++n) {
    for (int attempt = 0; attempt < cfg.tries_per_roi; ++attempt) {
      const double r = rng.uniform(rmin, rmax);
      const CircleROI roi{rng.uniform(r, static_cast<double>(w) - r),
                          rng.uniform(r, static_cast<double>(h) - r), r};
      long inside = 0, on_tissue = 0;
      const auto x0 = std::max<Eigen::Index>(0, static_cast<Eigen::Index>(std::floor(roi.cx - r)));
      const auto x1 = std::min<Eigen::Index>(w, static_cast<Eigen::Index>(std::ceil(roi.cx + r)));
      const auto y0 = std::max<Eigen::Index>(0, static_cast<Eigen::Index>(std::floor(roi.cy - r)));
      const auto y1 = std::min<Eigen::Index>(h, static_cast<Eigen::Index>(std::ceil(roi.cy + r)));
      for (Eigen::Index y = y0; y < y1; ++y)
        for (Eigen::Index x = x0; x < x1; ++x)
          if (roi.contains_pixel(x, y)) {
            ++inside;
            on_tissue += mask(y, x) ? 1 : 0;
          }
      if (inside > 0 && static_cast<double>(on_tissue) >= cfg.min_foreground_fraction * static_cast<double>(inside)) {
        rois.push_back(roi);
        break;
      }
    }
  }
  if (rois.empty()) throw Error("no foreground: could not place any ROI");
  return rois;
}

Image2D roi_weight(Eigen::Index width, Eigen::Index height, const std::vector<CircleROI>& rois,
                   double feather) {
  Image2D weight = Image2D::Zero(height, width);
  for (const CircleROI& roi : rois) {
    const auto x0 = std::max<Eigen::Index>(0, static_cast<Eigen::Index>(std::floor(roi.cx - roi.r)));
    const auto x1 = std::min<Eigen::Index>(width, static_cast<Eigen::Index>(std::ceil(roi.cx + roi.r)));
    const auto y0 = std::max<Eigen::Index>(0, static_cast<Eigen::Index>(std::floor(roi.cy - roi.r)));
    const auto y1 = std::min<Eigen::Index>(height, static_cast<Eigen::Index>(std::ceil(roi.cy + roi.r)));
    for (Eigen::Index y = y0; y < y1; ++y) {
      for (Eigen::Index x = x0; x < x1; ++x) {
        if (!roi.contains_pixel(x, y)) continue;
        double v = 1.0;
        if (feather > 0.0) {
          const double d = std::hypot(static_cast<double>(x) + 0.5 - roi.cx, static_cast<double>(y) + 0.5 - roi.cy);
          v = std::clamp((roi.r - d) / feather, 0.0, 1.0);
        }
        weight(y, x) = std::max(weight(y, x), v);
      }
    }
  }
  return weight;
}

Image2D composite(const Image2D& clean, const Image2D& artifact, const std::vector<CircleROI>& rois,
                  double feather) {
  require_same_shape(clean, artifact, "composite");
  const Image2D weight = roi_weight(clean.cols(), clean.rows(), rois, feather);
  const Image2D blended = clean + weight * (artifact - clean);
  const Image2D merged = (weight >= 1.0).select(artifact, (weight <= 0.0).select(clean, blended));
  return clip_unit(merged);
}

Image2D histogram_match(const Image2D& src, const Image2D& ref) {
  require_same_shape(src, ref, "histogram_match");
  std::array<std::int64_t, 256> src_cum{}, ref_cum{};
  for (Eigen::Index i = 0; i < src.size(); ++i) ++src_cum[match_bin(src.data()[i])];
  for (Eigen::Index i = 0; i < ref.size(); ++i) ++ref_cum[match_bin(ref.data()[i])];
  for (int b = 1; b < 256; ++b) {
    src_cum[b] += src_cum[b - 1];
    ref_cum[b] += ref_cum[b - 1];
  }
  std::array<double, 256> lut{};
  int j = 0;
  for (int b = 0; b < 256; ++b) {
    while (j < 255 && ref_cum[j] < src_cum[b]) ++j;
    lut[b] = static_cast<double>(j) / 255.0;
  }
  return src.unaryExpr([&lut](double v) { return lut[match_bin(v)]; });
}

std::vector<BBox> rois_to_bboxes(const std::vector<CircleROI>& rois, Eigen::Index width,
                                 Eigen::Index height) {
  std::vector<BBox> boxes;
  boxes.reserve(rois.size());
  for (const CircleROI& roi : rois) {
    BBox b{static_cast<int>(std::floor(roi.cx - roi.r)), static_cast<int>(std::floor(roi.cy - roi.r)),
           static_cast<int>(std::ceil(roi.cx + roi.r)), static_cast<int>(std::ceil(roi.cy + roi.r))};
    b.x_min = std::max(b.x_min, 0);
    b.y_min = std::max(b.y_min, 0);
    b.x_max = std::min(b.x_max, static_cast<int>(width));
    b.y_max = std::min(b.y_max, static_cast<int>(height));
    if (b.valid()) boxes.push_back(b);
  }
  return boxes;
}

}  // namespace forge
