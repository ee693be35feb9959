#include "forge/report.hpp"

#include "forge/datagen.hpp"
#include "forge/metrics.hpp"

#include <cmath>
#include <cstdio>

namespace forge {
namespace {

MeanSd mean_sd(const std::vector<double>& v) {
  MeanSd out;
  if (v.empty()) return out;
  for (double x : v) out.mean += x;
  out.mean /= static_cast<double>(v.size());
  if (v.size() < 2) return out;
  double ss = 0.0;
  for (double x : v) ss += (x - out.mean) * (x - out.mean);
  out.sd = std::sqrt(ss / static_cast<double>(v.size() - 1));
  return out;
}

BinRow make_row(const std::string& label, const std::vector<const CorrectionScore*>& scores) {
  BinRow row;
  row.label = label;
  row.count = static_cast<int>(scores.size());
  std::vector<double> rd, rc, pd, pc, gain;
  for (const CorrectionScore* s : scores) {
    rd.push_back(s->rmse_degraded);
    rc.push_back(s->rmse_corrected);
    pd.push_back(s->psnr_degraded);
    if (std::isfinite(s->psnr_corrected)) {
      pc.push_back(s->psnr_corrected);
      gain.push_back(s->psnr_corrected - s->psnr_degraded);
    } else {
      ++row.psnr_infinite;
    }
  }
  row.rmse_degraded = mean_sd(rd);
  row.rmse_corrected = mean_sd(rc);
  row.psnr_degraded = mean_sd(pd);
  row.psnr_corrected = mean_sd(pc);
  if (row.rmse_degraded.mean > 0.0)
    row.rmse_reduction_pct = (row.rmse_degraded.mean - row.rmse_corrected.mean) / row.rmse_degraded.mean * 100.0;
  if (!gain.empty()) row.psnr_gain_db = mean_sd(gain).mean;
  if (rd.size() >= 2) {
    try {
      row.t_statistic = paired_t_test(rd, rc).t_statistic;
    } catch (const Error&) {
      // identical columns: no t to report
    }
  }
  return row;
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

nlohmann::ordered_json opt_json(const std::optional<double>& v) {
  return v && std::isfinite(*v) ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
}

}  // namespace

BinnedReport binned_report(const std::vector<CorrectionScore>& scores) {
  BinnedReport report;
  std::vector<std::string> labels(kPsnrBins.begin(), kPsnrBins.end());
  for (const CorrectionScore& s : scores)
    if (s.psnr_bin == kUnbinned) {
      labels.emplace_back(kUnbinned);
      break;
    }
  for (const std::string& label : labels) {
    std::vector<const CorrectionScore*> in_bin;
    for (const CorrectionScore& s : scores)
      if (s.psnr_bin == label) in_bin.push_back(&s);
    report.rows.push_back(make_row(label, in_bin));
  }
  return report;
}

std::string format_report(const BinnedReport& report) {
  std::string out;
  char line[256];
  std::snprintf(line, sizeof line, "%-9s %5s  %-15s %-15s %-15s %-15s %9s %9s %8s\n", "PSNR bin", "n",
                "RMSE degraded", "RMSE corrected", "PSNR degraded", "PSNR corrected", "RMSE red.", "PSNR gain",
                "t");
  out += line;
  auto cell = [](const MeanSd& m, int n) {
    return n == 0 ? std::string("-") : fmt("%.3f", m.mean) + " (" + fmt("%.3f", m.sd) + ")";
  };
  auto pcell = [](const MeanSd& m, int n) {
    return n == 0 ? std::string("-") : fmt("%.2f", m.mean) + " (" + fmt("%.2f", m.sd) + ")";
  };
  for (const BinRow& r : report.rows) {
    const int finite = r.count - r.psnr_infinite;
    std::string psnr_corr = pcell(r.psnr_corrected, finite);
    if (r.psnr_infinite > 0) psnr_corr += " +" + std::to_string(r.psnr_infinite) + " inf";
    std::snprintf(line, sizeof line, "%-9s %5d  %-15s %-15s %-15s %-15s %9s %9s %8s\n", r.label.c_str(), r.count,
                  cell(r.rmse_degraded, r.count).c_str(), cell(r.rmse_corrected, r.count).c_str(),
                  pcell(r.psnr_degraded, r.count).c_str(), psnr_corr.c_str(),
                  r.count ? (fmt("%.1f", r.rmse_reduction_pct) + "%").c_str() : "-",
                  r.psnr_gain_db ? fmt("%+.2f", *r.psnr_gain_db).c_str() : "-",
                  r.t_statistic ? fmt("%.1f", *r.t_statistic).c_str() : "-");
    out += line;
  }
  return out;
}

nlohmann::ordered_json report_to_json(const BinnedReport& report) {
  using ojson = nlohmann::ordered_json;
  auto ms = [](const MeanSd& m) { return ojson{{"mean", m.mean}, {"sd", m.sd}}; };
  ojson rows = ojson::array();
  for (const BinRow& r : report.rows) {
    rows.push_back({{"bin", r.label},
                    {"n", r.count},
                    {"rmse_degraded", ms(r.rmse_degraded)},
                    {"rmse_corrected", ms(r.rmse_corrected)},
                    {"psnr_degraded", ms(r.psnr_degraded)},
                    {"psnr_corrected", ms(r.psnr_corrected)},
                    {"psnr_corrected_infinite", r.psnr_infinite},
                    {"rmse_reduction_pct", r.rmse_reduction_pct},
                    {"psnr_gain_db", opt_json(r.psnr_gain_db)},
                    {"t_statistic", opt_json(r.t_statistic)}});
  }
  return ojson{{"bins", rows}};
}

}  // namespace forge
