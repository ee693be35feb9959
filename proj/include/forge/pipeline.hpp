#pragma once

#include "forge/config.hpp"
#include "forge/datagen.hpp"
#include "forge/metrics.hpp"
#include "forge/report.hpp"

#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace forge {

/// Evaluation-level failure (missing corrections, unknown image ids). The
/// CLI maps it to exit code 1.
class EvaluationError : public Error {
 public:
  using Error::Error;
};

// ---- detection exchange ----

/// image id -> detections; JSON {"id": [{"box": [x0, y0, x1, y1], "score": s}]}.
using DetectionFile = std::map<std::string, std::vector<Detection>>;

DetectionFile parse_detection_file(const std::string& text);
DetectionFile read_detection_file(const std::filesystem::path& path);
void write_detection_file(const DetectionFile& detections, const std::filesystem::path& path);

struct DetectionReport {
  double iou_threshold = 0.5;
  std::vector<std::string> image_ids;  // manifest order
  DetectionEvaluation evaluation;
};

/// AP of `detections` against the manifest's ground-truth boxes. Every
/// detection id must name a manifest record.
DetectionReport evaluate_detection_file(const DatasetManifest& manifest, const DetectionFile& detections,
                                        double iou_threshold = 0.5);
std::string format_detection_report(const DetectionReport& report);
nlohmann::ordered_json detection_report_json(const DetectionReport& report);

// ---- correction ----

/// `original` outside every box, `corrected` inside.
Image2D composite_correction(const Image2D& original, const Image2D& corrected, const std::vector<BBox>& boxes);

/// Truncated (radius floor(3 sigma)), renormalized Gaussian blur of each box's
/// own pixels, mirrored at the box edges so nothing outside the box leaks in.
/// Later boxes win where boxes overlap. A radius of zero is the identity.
Image2D baseline_correct(const Image2D& img, const std::vector<BBox>& boxes, double sigma = 1.5);

/// Per sample: a corrected full frame or corrected crops with their boxes.
/// Paths are relative to the exchange file.
struct CorrectionEntry {
  std::optional<std::filesystem::path> image;
  std::vector<std::pair<BBox, std::filesystem::path>> crops;
};
using CorrectionExchange = std::map<std::string, CorrectionEntry>;

CorrectionExchange read_correction_exchange(const std::filesystem::path& path);
void write_correction_exchange(const CorrectionExchange& ex, const std::filesystem::path& path);

/// Applies one entry to the degraded image: full frames are taken as they
/// are, crops are pasted into their boxes.
Image2D resolve_correction(const CorrectionEntry& entry, const Image2D& degraded,
                           const std::filesystem::path& base_dir);

/// A manifest together with the directory its relative paths resolve against.
struct ManifestOnDisk {
  DatasetManifest manifest;
  std::filesystem::path root;

  static ManifestOnDisk load(const std::filesystem::path& path);
  Image2D clean(const SampleRecord& r) const;
  Image2D corrupted(const SampleRecord& r) const;
};

/// Scores every record against its correction. Missing corrections raise an
/// EvaluationError listing the sample ids.
std::vector<CorrectionScore> score_corrections(const ManifestOnDisk& data, const CorrectionExchange& ex,
                                               const std::filesystem::path& exchange_dir, int jobs = 1);

// ---- commands ----

struct BuildOptions {
  std::uint64_t seed = 0;
  std::filesystem::path out_dir;
  int jobs = 1;
  std::optional<int> n_per_bin;  // overrides the config
};

/// Writes out_dir/manifest.jsonl and out_dir/images/. `log` receives
/// human-readable progress lines.
DatasetManifest cmd_build(const BuildConfig& cfg, const BuildOptions& opts,
                          const std::function<void(const std::string&)>& log = {});

/// Writes baseline-blurred corrections for every record and the exchange
/// file out_dir/corrections.json. Boxes come from `detections` when given,
/// otherwise from the ground truth.
CorrectionExchange cmd_baseline(const ManifestOnDisk& data, const std::filesystem::path& out_dir, double sigma,
                                const DetectionFile* detections = nullptr, int jobs = 1);

struct RegionalStdRow {
  std::filesystem::path before, after;
  BBox box;
  double std_before = 0.0;
  double std_after = 0.0;
};

struct RegionalStdStudy {
  std::vector<RegionalStdRow> rows;
  TTestResult test;
};

/// Listing lines "before_path,after_path,x0,y0,x1,y1"; '#' comments and a
/// header line whose first field is "before" are skipped.
std::vector<RegionalStdRow> read_regional_listing(const std::filesystem::path& path);
RegionalStdStudy regional_std_study(std::vector<RegionalStdRow> rows);
std::string format_regional_std(const RegionalStdStudy& study);
nlohmann::ordered_json regional_std_json(const RegionalStdStudy& study);

/// Horizontal strip per record: clean, corrupted, corrupted with box
/// outlines, and the correction when one is supplied. Returns the files.
std::vector<std::filesystem::path> cmd_gallery(const ManifestOnDisk& data, const std::filesystem::path& out_dir,
                                               const CorrectionExchange* corrections = nullptr,
                                               const std::filesystem::path& exchange_dir = {});

/// Outline of each box (its outermost pixel ring) drawn at `value`.
Image2D draw_boxes(const Image2D& img, const std::vector<BBox>& boxes, double value = 1.0);

}  // namespace forge
