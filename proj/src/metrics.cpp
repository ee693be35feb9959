#include "forge/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>

namespace forge {

double iou(const BBox& a, const BBox& b) {
  const long iw = std::max(0, std::min(a.x_max, b.x_max) - std::max(a.x_min, b.x_min));
  const long ih = std::max(0, std::min(a.y_max, b.y_max) - std::max(a.y_min, b.y_min));
  const long inter = iw * ih;
  const long uni = a.area() + b.area() - inter;
  return uni > 0 ? static_cast<double>(inter) / static_cast<double>(uni) : 0.0;
}

DetectionEvaluation evaluate_detections(const std::vector<std::vector<Detection>>& predictions,
                                        const std::vector<std::vector<BBox>>& ground_truth,
                                        double iou_threshold) {
  if (predictions.size() > ground_truth.size())
    throw Error("predictions reference more images than the ground truth holds");

  DetectionEvaluation ev;
  ev.per_image.resize(ground_truth.size());
  long n_gt = 0;
  for (std::size_t i = 0; i < ground_truth.size(); ++i) {
    ev.per_image[i].gt = static_cast<long>(ground_truth[i].size());
    n_gt += ev.per_image[i].gt;
  }
  if (n_gt == 0) throw Error("undefined recall: no ground-truth boxes");

  struct Ranked {
    double score;
    std::size_t image;
    BBox box;
  };
  std::vector<Ranked> ranked;
  for (std::size_t i = 0; i < predictions.size(); ++i)
    for (const Detection& d : predictions[i]) {
      if (!std::isfinite(d.score)) throw Error("detection score is not finite");
      ranked.push_back({d.score, i, d.box});
    }
  std::sort(ranked.begin(), ranked.end(), [](const Ranked& a, const Ranked& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.image != b.image) return a.image < b.image;
    return a.box < b.box;
  });

  std::vector<std::vector<bool>> used(ground_truth.size());
  for (std::size_t i = 0; i < ground_truth.size(); ++i) used[i].assign(ground_truth[i].size(), false);

  std::vector<double> precision, recall;
  precision.reserve(ranked.size());
  recall.reserve(ranked.size());
  long tp = 0, fp = 0;
  for (const Ranked& det : ranked) {
    const auto& gts = ground_truth[det.image];
    double best = -1.0;
    std::size_t best_j = 0;
    for (std::size_t j = 0; j < gts.size(); ++j) {
      if (used[det.image][j]) continue;
      const double v = iou(det.box, gts[j]);
      if (v > best) {
        best = v;
        best_j = j;
      }
    }
    if (best >= iou_threshold) {
      used[det.image][best_j] = true;
      ++tp;
      ++ev.per_image[det.image].tp;
    } else {
      ++fp;
      ++ev.per_image[det.image].fp;
    }
    precision.push_back(static_cast<double>(tp) / static_cast<double>(tp + fp));
    recall.push_back(static_cast<double>(tp) / static_cast<double>(n_gt));
  }

  // Precision envelope, then sum over recall steps.
  for (std::size_t k = precision.size(); k-- > 1;) precision[k - 1] = std::max(precision[k - 1], precision[k]);
  double ap = 0.0;
  double prev_recall = 0.0;
  for (std::size_t k = 0; k < precision.size(); ++k) {
    ap += (recall[k] - prev_recall) * precision[k];
    prev_recall = recall[k];
  }

  ev.average_precision = ap;
  ev.true_positives = tp;
  ev.false_positives = fp;
  ev.false_negatives = n_gt - tp;
  return ev;
}

double regional_std(const Image2D& img, const BBox& box) {
  if (!box.valid() || box.area() < 4 || box.x_min < 0 || box.y_min < 0 || box.x_max > img.cols() ||
      box.y_max > img.rows())
    throw Error("degenerate box for regional std");
  // Welford accumulation.
  double mean = 0.0, m2 = 0.0;
  long n = 0;
  for (int y = box.y_min; y < box.y_max; ++y)
    for (int x = box.x_min; x < box.x_max; ++x) {
      const double v = img(y, x);
      ++n;
      const double delta = v - mean;
      mean += delta / static_cast<double>(n);
      m2 += delta * (v - mean);
    }
  return std::sqrt(m2 / static_cast<double>(n));
}

namespace {

// Modified Lentz evaluation of the incomplete-beta continued fraction.
double beta_continued_fraction(double x, double a, double b) {
  constexpr int kMaxIter = 10000;
  constexpr double kEps = 1e-12;
  constexpr double kTiny = 1e-300;
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kEps) return h;
  }
  throw Error("incomplete beta continued fraction did not converge");
}

}  // namespace

double incomplete_beta(double x, double a, double b) {
  if (!(a > 0.0 && b > 0.0)) throw Error("incomplete beta needs a, b > 0");
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double log_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) +
                           b * std::log1p(-x);
  const double front = std::exp(log_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_continued_fraction(x, a, b) / a;
  return 1.0 - front * beta_continued_fraction(1.0 - x, b, a) / b;
}

namespace {

// P(|T| >= |t|) for Student's t.
double two_sided_tail(double t, double df) { return incomplete_beta(df / (df + t * t), 0.5 * df, 0.5); }

}  // namespace

double student_t_cdf(double t, double df) {
  if (!(df > 0.0)) throw Error("t distribution needs df > 0");
  const double half_tail = 0.5 * two_sided_tail(t, df);
  return t > 0.0 ? 1.0 - half_tail : half_tail;
}

TTestResult paired_t_test(const std::vector<double>& before, const std::vector<double>& after) {
  if (before.size() != after.size()) throw Error("paired t-test: samples differ in length");
  const std::size_t n = before.size();
  if (n < 2) throw Error("paired t-test: need at least 2 pairs");

  double mean_d = 0.0, mean_before = 0.0, mean_after = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mean_d += before[i] - after[i];
    mean_before += before[i];
    mean_after += after[i];
  }
  const double nd = static_cast<double>(n);
  mean_d /= nd;
  mean_before /= nd;
  mean_after /= nd;
  double ss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dev = before[i] - after[i] - mean_d;
    ss += dev * dev;
  }
  const double sd = std::sqrt(ss / (nd - 1.0));
  if (!(sd > 0.0)) throw Error("degenerate sample: paired differences have zero variance");

  TTestResult r;
  r.t_statistic = mean_d / (sd / std::sqrt(nd));
  r.degrees_of_freedom = static_cast<int>(n - 1);
  const double df = static_cast<double>(r.degrees_of_freedom);
  const double tail = two_sided_tail(r.t_statistic, df);
  r.p_two_sided = tail;
  r.p_one_sided = r.t_statistic > 0.0 ? 0.5 * tail : 1.0 - 0.5 * tail;
  r.mean_difference = mean_d;
  r.percent_change = (mean_after - mean_before) / mean_before * 100.0;
  return r;
}

std::string format_ttest(const TTestResult& r) {
  char buf[192];
  std::snprintf(buf, sizeof buf, "changed by %+.2f%% (t = %.3f, df = %d, p = %.3g, one-sided p = %.3g)",
                r.percent_change, r.t_statistic, r.degrees_of_freedom, r.p_two_sided, r.p_one_sided);
  return buf;
}

}  // namespace forge
