#pragma once

#include "forge/composit.hpp"
#include "forge/core.hpp"

#include <cmath>
#include <limits>
#include <string>
#include <vector>

namespace forge {

template <typename A, typename B>
double rmse(const Eigen::ArrayBase<A>& a, const Eigen::ArrayBase<B>& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw Error("rmse: dimension mismatch");
  if (a.size() == 0) throw Error("rmse: empty images");
  return std::sqrt((a.template cast<double>() - b.template cast<double>()).square().mean());
}

/// PSNR in dB for a given unit-scale RMSE; +infinity when rmse == 0.
inline double psnr_from_rmse(double rmse_value) {
  if (rmse_value == 0.0) return std::numeric_limits<double>::infinity();
  return -20.0 * std::log10(rmse_value);
}

/// Unit peak: -20 log10(rmse). Identical images give +infinity.
template <typename A, typename B>
double psnr(const Eigen::ArrayBase<A>& a, const Eigen::ArrayBase<B>& b) {
  return psnr_from_rmse(rmse(a, b));
}

/// Intersection over union of half-open pixel boxes.
double iou(const BBox& a, const BBox& b);

struct Detection {
  BBox box;
  double score = 0.0;

  bool operator==(const Detection&) const = default;
};

struct DetectionEvaluation {
  double average_precision = 0.0;
  long true_positives = 0;
  long false_positives = 0;
  long false_negatives = 0;
  /// Per image: (true positives, false positives, ground-truth boxes).
  struct PerImage {
    long tp = 0, fp = 0, gt = 0;
  };
  std::vector<PerImage> per_image;
};

/// Single-class VOC-style evaluation. Detections are pooled and ranked by
/// score (ties broken by image index, then box). Each is matched to the
/// unmatched ground-truth box of highest IoU in its image and counts as a
/// true positive when that IoU reaches `iou_threshold`. AP is the area under
/// the precision envelope (all-point interpolation).
DetectionEvaluation evaluate_detections(const std::vector<std::vector<Detection>>& predictions,
                                        const std::vector<std::vector<BBox>>& ground_truth,
                                        double iou_threshold = 0.5);

inline double average_precision(const std::vector<std::vector<Detection>>& predictions,
                                const std::vector<std::vector<BBox>>& ground_truth,
                                double iou_threshold = 0.5) {
  return evaluate_detections(predictions, ground_truth, iou_threshold).average_precision;
}

/// Population standard deviation inside a box of at least 4 pixels.
double regional_std(const Image2D& img, const BBox& box);

/// Regularized incomplete beta I_x(a, b), continued fraction to 1e-12.
double incomplete_beta(double x, double a, double b);

/// CDF of Student's t distribution.
double student_t_cdf(double t, double df);

struct TTestResult {
  double t_statistic = 0.0;
  int degrees_of_freedom = 0;
  double p_two_sided = 1.0;
  double p_one_sided = 1.0;  // H1: mean(before - after) > 0
  double mean_difference = 0.0;  // mean(before - after)
  double percent_change = 0.0;   // mean(after - before) / mean(before) * 100
};

/// Paired t-test on before - after.
TTestResult paired_t_test(const std::vector<double>& before, const std::vector<double>& after);

/// "changed by -0.76% (t = 2.61, df = 54, p = 0.014)" style summary.
std::string format_ttest(const TTestResult& r);

}  // namespace forge
