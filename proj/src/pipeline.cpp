#include "forge/pipeline.hpp"

#include "forge/io.hpp"
#include "forge/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace forge {
namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

namespace {

std::string read_text(const fs::path& path, const char* what) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError(std::string("cannot open ") + what + " '" + path.string() + "'");
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out || !(out << text)) throw Error("cannot write '" + path.string() + "'");
}

BBox box_from_json(const ojson& b) {
  if (!b.is_array() || b.size() != 4) throw Error("box must be [x0, y0, x1, y1]");
  for (const ojson& v : b)
    if (!v.is_number_integer()) throw Error("box coordinates must be integers");
  const BBox box{b[0].get<int>(), b[1].get<int>(), b[2].get<int>(), b[3].get<int>()};
  if (!box.valid()) throw Error("box [x0, y0, x1, y1] needs x0 < x1 and y0 < y1");
  return box;
}

ojson box_to_json(const BBox& b) { return ojson::array({b.x_min, b.y_min, b.x_max, b.y_max}); }

BBox clip_box(const BBox& b, Eigen::Index w, Eigen::Index h) {
  return {std::max(b.x_min, 0), std::max(b.y_min, 0), std::min<int>(b.x_max, static_cast<int>(w)),
          std::min<int>(b.y_max, static_cast<int>(h))};
}

// Half-sample symmetric reflection into [0, n).
Eigen::Index mirror(Eigen::Index i, Eigen::Index n) {
  const Eigen::Index period = 2 * n;
  Eigen::Index m = i % period;
  if (m < 0) m += period;
  return m < n ? m : period - 1 - m;
}

std::vector<double> gaussian_kernel(double sigma) {
  const int radius = static_cast<int>(std::floor(3.0 * sigma));
  std::vector<double> k(static_cast<std::size_t>(2 * radius + 1));
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    const double v = std::exp(-0.5 * i * i / (sigma * sigma));
    k[static_cast<std::size_t>(i + radius)] = v;
    sum += v;
  }
  for (double& v : k) v /= sum;
  return k;
}

Image2D blur_crop(const Image2D& crop, const std::vector<double>& kernel) {
  const auto radius = static_cast<Eigen::Index>(kernel.size() / 2);
  const Eigen::Index h = crop.rows(), w = crop.cols();
  Image2D tmp(h, w), out(h, w);
  for (Eigen::Index y = 0; y < h; ++y)
    for (Eigen::Index x = 0; x < w; ++x) {
      double acc = 0.0;
      for (Eigen::Index k = -radius; k <= radius; ++k) acc += kernel[static_cast<std::size_t>(k + radius)] * crop(y, mirror(x + k, w));
      tmp(y, x) = acc;
    }
  for (Eigen::Index y = 0; y < h; ++y)
    for (Eigen::Index x = 0; x < w; ++x) {
      double acc = 0.0;
      for (Eigen::Index k = -radius; k <= radius; ++k) acc += kernel[static_cast<std::size_t>(k + radius)] * tmp(mirror(y + k, h), x);
      out(y, x) = acc;
    }
  return out;
}

std::string join_ids(const std::vector<std::string>& ids) {
  std::string out;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (i == 8) return out + ", ... (" + std::to_string(ids.size()) + " in total)";
    out += (i ? ", " : "") + ids[i];
  }
  return out;
}

}  // namespace

// ---- detection exchange ----

DetectionFile parse_detection_file(const std::string& text) {
  ojson j;
  try {
    j = ojson::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw UsageError(std::string("detection file is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw UsageError("detection file must be a JSON object keyed by image id");
  DetectionFile out;
  for (const auto& [id, list] : j.items()) {
    auto& dets = out[id];
    if (!list.is_array()) throw UsageError("detection file: entry '" + id + "' must be a list");
    for (std::size_t i = 0; i < list.size(); ++i) {
      try {
        Detection d;
        d.box = box_from_json(list[i].at("box"));
        d.score = list[i].at("score").get<double>();
        if (!std::isfinite(d.score) || d.score < 0.0 || d.score > 1.0) throw Error("score must lie in [0, 1]");
        dets.push_back(d);
      } catch (const std::exception& e) {
        throw UsageError("detection file: '" + id + "' item " + std::to_string(i) + ": " + e.what());
      }
    }
  }
  return out;
}

DetectionFile read_detection_file(const fs::path& path) {
  return parse_detection_file(read_text(path, "detection file"));
}

void write_detection_file(const DetectionFile& detections, const fs::path& path) {
  ojson j = ojson::object();
  for (const auto& [id, list] : detections) {
    ojson arr = ojson::array();
    for (const Detection& d : list) arr.push_back({{"box", box_to_json(d.box)}, {"score", d.score}});
    j[id] = arr;
  }
  write_text(path, j.dump(1) + "\n");
}

DetectionReport evaluate_detection_file(const DatasetManifest& manifest, const DetectionFile& detections,
                                        double iou_threshold) {
  if (!(iou_threshold > 0.0 && iou_threshold <= 1.0)) throw UsageError("IoU threshold must lie in (0, 1]");
  DetectionReport rep;
  rep.iou_threshold = iou_threshold;
  std::vector<std::vector<BBox>> gts;
  std::map<std::string, std::size_t> index;
  for (const SampleRecord& r : manifest.records) {
    index[r.sample_id] = rep.image_ids.size();
    rep.image_ids.push_back(r.sample_id);
    gts.push_back(r.boxes);
  }
  std::vector<std::vector<Detection>> preds(gts.size());
  std::vector<std::string> unknown;
  for (const auto& [id, list] : detections) {
    auto it = index.find(id);
    if (it == index.end())
      unknown.push_back(id);
    else
      preds[it->second] = list;
  }
  if (!unknown.empty()) throw EvaluationError("unresolved image id(s): " + join_ids(unknown));
  rep.evaluation = evaluate_detections(preds, gts, iou_threshold);
  return rep;
}

std::string format_detection_report(const DetectionReport& rep) {
  const DetectionEvaluation& ev = rep.evaluation;
  char buf[256];
  std::string out;
  std::snprintf(buf, sizeof buf, "mAP@%.2f = %.4f (single class)\nTP %ld  FP %ld  FN %ld\n", rep.iou_threshold,
                ev.average_precision, ev.true_positives, ev.false_positives, ev.false_negatives);
  out += buf;
  out += "image       tp   fp   gt\n";
  for (std::size_t i = 0; i < rep.image_ids.size(); ++i) {
    const auto& p = ev.per_image[i];
    std::snprintf(buf, sizeof buf, "%-10s %3ld  %3ld  %3ld\n", rep.image_ids[i].c_str(), p.tp, p.fp, p.gt);
    out += buf;
  }
  return out;
}

ojson detection_report_json(const DetectionReport& rep) {
  const DetectionEvaluation& ev = rep.evaluation;
  ojson per = ojson::object();
  for (std::size_t i = 0; i < rep.image_ids.size(); ++i)
    per[rep.image_ids[i]] = {{"tp", ev.per_image[i].tp}, {"fp", ev.per_image[i].fp}, {"gt", ev.per_image[i].gt}};
  return {{"iou_threshold", rep.iou_threshold}, {"map", ev.average_precision},
          {"tp", ev.true_positives},            {"fp", ev.false_positives},
          {"fn", ev.false_negatives},           {"per_image", per}};
}

// ---- correction ----

Image2D composite_correction(const Image2D& original, const Image2D& corrected, const std::vector<BBox>& boxes) {
  if (original.rows() != corrected.rows() || original.cols() != corrected.cols())
    throw Error("composite_correction: dimension mismatch");
  Image2D out = original;
  for (const BBox& raw : boxes) {
    const BBox b = clip_box(raw, original.cols(), original.rows());
    if (!b.valid()) continue;
    out.block(b.y_min, b.x_min, b.height(), b.width()) = corrected.block(b.y_min, b.x_min, b.height(), b.width());
  }
  return out;
}

Image2D baseline_correct(const Image2D& img, const std::vector<BBox>& boxes, double sigma) {
  if (!(sigma > 0.0)) throw UsageError("blur sigma must be > 0");
  const std::vector<double> kernel = gaussian_kernel(sigma);
  if (kernel.size() == 1) return img;
  Image2D corrected = img;
  for (const BBox& raw : boxes) {
    const BBox b = clip_box(raw, img.cols(), img.rows());
    if (!b.valid()) continue;
    const Image2D crop = img.block(b.y_min, b.x_min, b.height(), b.width());
    corrected.block(b.y_min, b.x_min, b.height(), b.width()) = blur_crop(crop, kernel);
  }
  return composite_correction(img, corrected, boxes);
}

CorrectionExchange read_correction_exchange(const fs::path& path) {
  ojson j;
  try {
    j = ojson::parse(read_text(path, "correction exchange"));
  } catch (const nlohmann::json::exception& e) {
    throw UsageError(std::string("correction exchange is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw UsageError("correction exchange must be a JSON object keyed by sample id");
  CorrectionExchange ex;
  for (const auto& [id, v] : j.items()) {
    try {
      CorrectionEntry e;
      if (v.contains("image")) e.image = v.at("image").get<std::string>();
      if (v.contains("crops"))
        for (const ojson& c : v.at("crops"))
          e.crops.emplace_back(box_from_json(c.at("box")), c.at("image").get<std::string>());
      if (e.image.has_value() == !e.crops.empty()) throw Error("needs exactly one of \"image\" or \"crops\"");
      ex[id] = std::move(e);
    } catch (const std::exception& e) {
      throw UsageError("correction exchange entry '" + id + "': " + e.what());
    }
  }
  return ex;
}

void write_correction_exchange(const CorrectionExchange& ex, const fs::path& path) {
  ojson j = ojson::object();
  for (const auto& [id, e] : ex) {
    if (e.image) {
      j[id] = {{"image", e.image->generic_string()}};
    } else {
      ojson crops = ojson::array();
      for (const auto& [box, p] : e.crops) crops.push_back({{"box", box_to_json(box)}, {"image", p.generic_string()}});
      j[id] = {{"crops", crops}};
    }
  }
  write_text(path, j.dump(1) + "\n");
}

Image2D resolve_correction(const CorrectionEntry& entry, const Image2D& degraded, const fs::path& base_dir) {
  if (entry.image) {
    Image2D full = load_image(base_dir / *entry.image);
    if (full.rows() != degraded.rows() || full.cols() != degraded.cols())
      throw EvaluationError("corrected image '" + entry.image->string() + "' is " + std::to_string(full.cols()) +
                            "x" + std::to_string(full.rows()) + ", expected " + std::to_string(degraded.cols()) +
                            "x" + std::to_string(degraded.rows()));
    return full;
  }
  Image2D out = degraded;
  for (const auto& [box, p] : entry.crops) {
    if (box.x_min < 0 || box.y_min < 0 || box.x_max > degraded.cols() || box.y_max > degraded.rows())
      throw EvaluationError("crop box for '" + p.string() + "' leaves the frame");
    const Image2D crop = load_image(base_dir / p);
    if (crop.rows() != box.height() || crop.cols() != box.width())
      throw EvaluationError("crop '" + p.string() + "' does not match its box size");
    out.block(box.y_min, box.x_min, box.height(), box.width()) = crop;
  }
  return out;
}

ManifestOnDisk ManifestOnDisk::load(const fs::path& path) {
  return {read_manifest(path), path.parent_path()};
}

Image2D ManifestOnDisk::clean(const SampleRecord& r) const { return load_image(root / r.clean_path); }
Image2D ManifestOnDisk::corrupted(const SampleRecord& r) const { return load_image(root / r.corrupted_path); }

std::vector<CorrectionScore> score_corrections(const ManifestOnDisk& data, const CorrectionExchange& ex,
                                               const fs::path& exchange_dir, int jobs) {
  const auto& records = data.manifest.records;
  std::vector<std::string> missing;
  for (const SampleRecord& r : records)
    if (!ex.contains(r.sample_id)) missing.push_back(r.sample_id);
  if (!missing.empty()) throw EvaluationError("missing corrections for " + join_ids(missing));

  std::vector<CorrectionScore> scores(records.size());
  parallel_for(records.size(), jobs, [&](std::size_t i) {
    const SampleRecord& r = records[i];
    const Image2D clean = data.clean(r);
    const Image2D degraded = data.corrupted(r);
    const Image2D corrected = resolve_correction(ex.at(r.sample_id), degraded, exchange_dir);
    CorrectionScore& s = scores[i];
    s.sample_id = r.sample_id;
    s.psnr_bin = r.psnr_bin;
    s.rmse_degraded = rmse(degraded, clean);
    s.rmse_corrected = rmse(corrected, clean);
    s.psnr_degraded = psnr_from_rmse(s.rmse_degraded);
    s.psnr_corrected = psnr_from_rmse(s.rmse_corrected);
  });
  return scores;
}

// ---- commands ----

DatasetManifest cmd_build(const BuildConfig& config, const BuildOptions& opts,
                          const std::function<void(const std::string&)>& log) {
  BuildConfig cfg = config;
  if (opts.n_per_bin) cfg.n_per_bin = *opts.n_per_bin;
  auto say = [&](const std::string& s) {
    if (log) log(s);
  };
  if (opts.out_dir.empty()) throw UsageError("an output directory is required");
  for (std::size_t i = 0; i < cfg.volumes.size(); ++i)
    if (!fs::exists(cfg.volume_path(i)))
      throw UsageError("input volume not found: " + cfg.volume_path(i).string());

  std::vector<std::string> notes;
  const std::vector<PoolSlice> pool = build_pool(cfg, opts.seed, notes);
  say("slice pool: " + std::to_string(pool.size()) + " slices from " + std::to_string(cfg.volumes.size()) +
      " volume(s)");

  fs::create_directories(opts.out_dir / "images");
  auto sink = [&](const SampleRecord& r, const PairResult& p) {
    save_image(p.clean_variant, opts.out_dir / r.clean_path);
    save_image(p.corrupted, opts.out_dir / r.corrupted_path);
  };

  DatasetManifest m;
  if (cfg.mode == BuildMode::Binned) {
    const int n = cfg.n_per_bin;
    long next_report = 1000;
    auto progress = [&](const BuildProgress& p) {
      if (p.attempts < next_report) return;
      next_report = (p.attempts / 1000 + 1) * 1000;
      std::string line = "attempt " + std::to_string(p.attempts) + ":";
      for (std::size_t b = 0; b < kPsnrBins.size(); ++b)
        line += " " + std::string(kPsnrBins[b]) + " " + std::to_string(p.filled[b]) + "/" + std::to_string(n);
      say(line);
    };
    m = build_binned_testset(pool, n, opts.seed, cfg, opts.jobs, sink, progress);
  } else {
    m = build_training_set(pool, cfg.pairs_per_slice, opts.seed, cfg, opts.jobs, sink);
  }
  m.notes.insert(m.notes.begin(), notes.begin(), notes.end());
  write_manifest(m, opts.out_dir / "manifest.jsonl");

  std::map<std::string, std::vector<double>> by_bin;
  for (const SampleRecord& r : m.records) by_bin[r.psnr_bin].push_back(r.psnr);
  for (const auto& [label, v] : by_bin) {
    const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    char buf[128];
    std::snprintf(buf, sizeof buf, "bin %-8s %5zu records, PSNR %.2f .. %.2f dB", label.c_str(), v.size(), *lo, *hi);
    say(buf);
  }
  say("wrote " + std::to_string(m.records.size()) + " records to " + (opts.out_dir / "manifest.jsonl").string());
  return m;
}

CorrectionExchange cmd_baseline(const ManifestOnDisk& data, const fs::path& out_dir, double sigma,
                                const DetectionFile* detections, int jobs) {
  fs::create_directories(out_dir);
  const auto& records = data.manifest.records;
  std::vector<fs::path> names(records.size());
  parallel_for(records.size(), jobs, [&](std::size_t i) {
    const SampleRecord& r = records[i];
    std::vector<BBox> boxes = r.boxes;
    if (detections) {
      boxes.clear();
      if (auto it = detections->find(r.sample_id); it != detections->end())
        for (const Detection& d : it->second) boxes.push_back(d.box);
    }
    names[i] = r.sample_id + "_corrected.png";
    save_image(baseline_correct(data.corrupted(r), boxes, sigma), out_dir / names[i]);
  });
  CorrectionExchange ex;
  for (std::size_t i = 0; i < records.size(); ++i) ex[records[i].sample_id].image = names[i];
  write_correction_exchange(ex, out_dir / "corrections.json");
  return ex;
}

std::vector<RegionalStdRow> read_regional_listing(const fs::path& path) {
  std::istringstream in(read_text(path, "listing"));
  const fs::path base = path.parent_path();
  std::vector<RegionalStdRow> rows;
  std::string line;
  for (long line_no = 1; std::getline(in, line); ++line_no) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    std::vector<std::string> f;
    std::istringstream cells(line);
    for (std::string c; std::getline(cells, c, ',');) f.push_back(c);
    if (line_no == 1 && f.front() == "before") continue;
    if (f.size() != 6) throw UsageError("listing line " + std::to_string(line_no) + ": expected 6 fields");
    RegionalStdRow row;
    row.before = base / f[0];
    row.after = base / f[1];
    try {
      row.box = {std::stoi(f[2]), std::stoi(f[3]), std::stoi(f[4]), std::stoi(f[5])};
    } catch (const std::exception&) {
      throw UsageError("listing line " + std::to_string(line_no) + ": box coordinates must be integers");
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

RegionalStdStudy regional_std_study(std::vector<RegionalStdRow> rows) {
  if (rows.size() < 2) throw UsageError("regional std study needs at least 2 boxes");
  std::map<fs::path, Image2D> cache;
  auto image = [&](const fs::path& p) -> const Image2D& {
    auto it = cache.find(p);
    if (it == cache.end()) it = cache.emplace(p, load_image(p)).first;
    return it->second;
  };
  RegionalStdStudy study;
  std::vector<double> before, after;
  for (RegionalStdRow& row : rows) {
    row.std_before = regional_std(image(row.before), row.box);
    row.std_after = regional_std(image(row.after), row.box);
    before.push_back(row.std_before);
    after.push_back(row.std_after);
  }
  study.test = paired_t_test(before, after);
  study.rows = std::move(rows);
  return study;
}

std::string format_regional_std(const RegionalStdStudy& study) {
  std::string out = "box                    std before  std after\n";
  char buf[256];
  for (const RegionalStdRow& r : study.rows) {
    std::snprintf(buf, sizeof buf, "[%4d,%4d,%4d,%4d]  %10.5f  %9.5f  %s\n", r.box.x_min, r.box.y_min, r.box.x_max,
                  r.box.y_max, r.std_before, r.std_after, r.before.filename().string().c_str());
    out += buf;
  }
  out += "within-box std " + format_ttest(study.test) + "\n";
  return out;
}

ojson regional_std_json(const RegionalStdStudy& study) {
  ojson rows = ojson::array();
  for (const RegionalStdRow& r : study.rows)
    rows.push_back({{"before", r.before.generic_string()},
                    {"after", r.after.generic_string()},
                    {"box", box_to_json(r.box)},
                    {"std_before", r.std_before},
                    {"std_after", r.std_after}});
  const TTestResult& t = study.test;
  return {{"boxes", rows},
          {"t_statistic", t.t_statistic},
          {"df", t.degrees_of_freedom},
          {"p_two_sided", t.p_two_sided},
          {"p_one_sided", t.p_one_sided},
          {"mean_difference", t.mean_difference},
          {"percent_change", t.percent_change}};
}

Image2D draw_boxes(const Image2D& img, const std::vector<BBox>& boxes, double value) {
  Image2D out = img;
  for (const BBox& raw : boxes) {
    const BBox b = clip_box(raw, img.cols(), img.rows());
    if (!b.valid()) continue;
    for (int x = b.x_min; x < b.x_max; ++x) out(b.y_min, x) = out(b.y_max - 1, x) = value;
    for (int y = b.y_min; y < b.y_max; ++y) out(y, b.x_min) = out(y, b.x_max - 1) = value;
  }
  return out;
}

std::vector<fs::path> cmd_gallery(const ManifestOnDisk& data, const fs::path& out_dir,
                                  const CorrectionExchange* corrections, const fs::path& exchange_dir) {
  fs::create_directories(out_dir);
  std::vector<fs::path> files;
  for (const SampleRecord& r : data.manifest.records) {
    const Image2D clean = data.clean(r);
    const Image2D corrupted = data.corrupted(r);
    std::vector<Image2D> panels{clean, corrupted, draw_boxes(corrupted, r.boxes)};
    if (corrections)
      if (auto it = corrections->find(r.sample_id); it != corrections->end())
        panels.push_back(resolve_correction(it->second, corrupted, exchange_dir));
    const Eigen::Index w = clean.cols(), h = clean.rows();
    Image2D strip(h, w * static_cast<Eigen::Index>(panels.size()));
    for (std::size_t k = 0; k < panels.size(); ++k) strip.middleCols(static_cast<Eigen::Index>(k) * w, w) = panels[k];
    files.push_back(out_dir / (r.sample_id + "_panel.png"));
    save_image(strip, files.back());
  }
  return files;
}

}  // namespace forge
