#pragma once

#include "forge/core.hpp"

#include <json.hpp>

#include <optional>
#include <string>
#include <vector>

namespace forge {

/// Degraded-vs-target and corrected-vs-target errors of one sample.
struct CorrectionScore {
  std::string sample_id;
  std::string psnr_bin;
  double rmse_degraded = 0.0;
  double rmse_corrected = 0.0;
  double psnr_degraded = 0.0;
  double psnr_corrected = 0.0;  // +inf when the correction is exact
};

struct MeanSd {
  double mean = 0.0;
  double sd = 0.0;  // sample standard deviation; 0 for fewer than two values
};

struct BinRow {
  std::string label;
  int count = 0;
  MeanSd rmse_degraded, rmse_corrected;
  MeanSd psnr_degraded, psnr_corrected;  // corrected: finite values only
  int psnr_infinite = 0;                  // exact corrections left out of the PSNR mean
  double rmse_reduction_pct = 0.0;        // (mean degraded - mean corrected) / mean degraded * 100
  std::optional<double> psnr_gain_db;     // mean paired gain over samples with finite corrected PSNR
  std::optional<double> t_statistic;      // paired t on RMSE; empty when undefined
};

struct BinnedReport {
  std::vector<BinRow> rows;
};

/// One row per PSNR bin (the five test bins always, ">=21" when present).
BinnedReport binned_report(const std::vector<CorrectionScore>& scores);

std::string format_report(const BinnedReport& report);
nlohmann::ordered_json report_to_json(const BinnedReport& report);

}  // namespace forge
