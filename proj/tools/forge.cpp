// forge: synthesize localized MRI motion-artifact datasets and score
// external detectors and correctors against them.

#include "forge/config.hpp"
#include "forge/datagen.hpp"
#include "forge/io.hpp"
#include "forge/morphwarp.hpp"
#include "forge/phantom.hpp"
#include "forge/pipeline.hpp"
#include "forge/ringgen.hpp"
#include "forge/ripplegen.hpp"

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <cstdlib>
#include <fstream>
#include <iostream>

namespace fs = std::filesystem;
using namespace forge;

namespace {

void setup_logging() {
  auto logger = spdlog::stderr_color_mt("forge");
  logger->set_pattern("[%l] %v");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::info);
  if (const char* env = std::getenv("FORGE_LOG")) {
    const auto level = spdlog::level::from_str(env);
    // from_str maps unknown names to "off"
    if (level == spdlog::level::off && std::string_view(env) != "off")
      spdlog::warn("FORGE_LOG='{}' is not a log level; keeping info", env);
    else
      spdlog::set_level(level);
  }
}

void write_json(const fs::path& path, const nlohmann::ordered_json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out || !(out << j.dump(2) << '\n')) throw Error("cannot write '" + path.string() + "'");
  spdlog::info("wrote {}", path.string());
}

Image2D load_input(const fs::path& path) { return normalize(load_image(path)); }

}  // namespace

int main(int argc, char** argv) {
  setup_logging();

  CLI::App app{"Localized MRI motion-artifact synthesis and evaluation"};
  app.require_subcommand(1);
  std::uint64_t seed = 0;
  int jobs = 1;
  fs::path out, config_path, input, manifest_path, detections_path, corrections_path, listing_path, json_path;
  std::optional<int> n_per_bin;
  double iou_thresh = 0.5, epsilon = kDefaultWarpEpsilon, sigma = 1.5;
  int combo = 0;
  bool no_jitter = false;
  std::optional<double> amp;
  std::vector<long> dims{176, 208, 176};

  auto add_seed = [&](CLI::App* c) { c->add_option("--seed", seed, "Master seed")->capture_default_str(); };
  auto add_jobs = [&](CLI::App* c) {
    c->add_option("--jobs", jobs, "Worker threads")->check(CLI::Range(1, 1024))->capture_default_str();
  };

  auto* build = app.add_subcommand("build", "Synthesize a dataset from the volumes in a config");
  build->add_option("--config", config_path, "INI config")->required();
  build->add_option("--out", out, "Output directory")->required();
  build->add_option("--n-per-bin", n_per_bin, "Records per PSNR bin (overrides the config)")
      ->check(CLI::PositiveNumber);
  add_seed(build);
  add_jobs(build);

  auto* warp = app.add_subcommand("warp", "Apply a random radial warp to one image");
  warp->add_option("--in", input, "Input PNG/PGM")->required();
  warp->add_option("--out", out, "Output PNG")->required();
  warp->add_option("--epsilon", epsilon, "Stretch exponent")->check(CLI::NonNegativeNumber)->capture_default_str();
  add_seed(warp);

  auto* ring = app.add_subcommand("ring", "Full-frame ringing artifact for one image");
  ring->add_option("--in", input, "Input PNG/PGM")->required();
  ring->add_option("--out", out, "Output PNG")->required();
  ring->add_option("--combo", combo, "Base combination 1-3 (0 draws one)")->check(CLI::Range(0, 3));
  ring->add_flag("--no-jitter", no_jitter, "Use the base combination as is");
  add_seed(ring);

  auto* ripple = app.add_subcommand("ripple", "Full-frame elliptic ripple for one image");
  ripple->add_option("--in", input, "Input PNG/PGM")->required();
  ripple->add_option("--out", out, "Output PNG")->required();
  ripple->add_option("--amp", amp, "Fixed amplitude in [0, 1)");
  add_seed(ripple);

  auto* eval_detect = app.add_subcommand("eval-detect", "Score a detection file against a manifest");
  eval_detect->add_option("--manifest", manifest_path, "manifest.jsonl")->required()->check(CLI::ExistingFile);
  eval_detect->add_option("--detections", detections_path, "Detection JSON")->required()->check(CLI::ExistingFile);
  eval_detect->add_option("--iou-thresh", iou_thresh, "IoU for a true positive")->capture_default_str();
  eval_detect->add_option("--json", json_path, "Also write the report as JSON");

  auto* eval_correct = app.add_subcommand("eval-correct", "Per-bin RMSE/PSNR report for a set of corrections");
  eval_correct->add_option("--manifest", manifest_path, "manifest.jsonl")->required()->check(CLI::ExistingFile);
  eval_correct->add_option("--corrections", corrections_path, "Correction exchange JSON")
      ->required()
      ->check(CLI::ExistingFile);
  eval_correct->add_option("--json", json_path, "Also write the report as JSON");
  add_jobs(eval_correct);

  auto* regional = app.add_subcommand("regional-std", "Paired t-test on within-box standard deviations");
  regional->add_option("--listing", listing_path, "CSV: before,after,x0,y0,x1,y1")->required()->check(CLI::ExistingFile);
  regional->add_option("--json", json_path, "Also write the study as JSON");

  auto* gallery = app.add_subcommand("gallery", "Render clean/corrupted/boxes/corrected strips");
  gallery->add_option("--manifest", manifest_path, "manifest.jsonl")->required()->check(CLI::ExistingFile);
  gallery->add_option("--out", out, "Output directory")->required();
  gallery->add_option("--corrections", corrections_path, "Optional correction exchange JSON")
      ->check(CLI::ExistingFile);

  auto* phantom = app.add_subcommand("phantom", "Write the synthetic head phantom as NIfTI");
  phantom->add_option("--out", out, "Output .nii")->required();
  phantom->add_option("--dims", dims, "nx ny nz")->expected(3)->capture_default_str();
  add_seed(phantom);

  auto* baseline = app.add_subcommand("baseline", "Blur inside boxes as a stand-in corrector");
  baseline->add_option("--manifest", manifest_path, "manifest.jsonl")->required()->check(CLI::ExistingFile);
  baseline->add_option("--out", out, "Output directory")->required();
  baseline->add_option("--sigma", sigma, "Gaussian sigma in pixels")->check(CLI::PositiveNumber)->capture_default_str();
  baseline->add_option("--detections", detections_path, "Blur detected boxes instead of the ground truth")
      ->check(CLI::ExistingFile);
  add_jobs(baseline);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*build) {
      const BuildConfig cfg = load_config(config_path);
      cmd_build(cfg, {seed, out, jobs, n_per_bin}, [](const std::string& s) { spdlog::info("{}", s); });
    } else if (*warp) {
      const Image2D img = load_input(input);
      Rng rng(seed);
      const auto circles = place_circles(rng, img.cols(), img.rows(), epsilon);
      save_image(warp_image(img, circles), out);
      for (const WarpCircle& c : circles) spdlog::info("circle ({:.2f}, {:.2f}) r {:.2f}", c.cx, c.cy, c.r);
    } else if (*ring) {
      const Image2D img = load_input(input);
      Rng rng(seed);
      const auto bases = base_combinations();
      const int idx = combo > 0 ? combo - 1 : static_cast<int>(rng.uniform_int(0, 2));
      AnnularSectorParams p = bases[static_cast<std::size_t>(idx)];
      if (!no_jitter) p = jitter_params(p, rng);
      double max_imag = 0.0;
      save_image(clip_unit(gen_ring_artifact_image(img, p, &max_imag)), out);
      spdlog::info("combination {}: r {}..{}, phase {}, magnification {}, theta {}..{}; max |Im| {:.3g}", idx + 1,
                   p.r_inner, p.r_outer, p.phase_shift, p.magnification, p.theta_start, p.theta_end, max_imag);
    } else if (*ripple) {
      const Image2D img = load_input(input);
      Rng rng(seed);
      RippleParams p = sample_ripple_params(rng, img.cols(), img.rows());
      if (amp) p.amp = *amp;
      save_image(clip_unit(gen_ripple_artifact_image(img, p)), out);
      spdlog::info("center ({:.1f}, {:.1f}) ratio {:.3f} orientation {:.1f} freq {:.3f} amp {:.3f} band {:.1f}..{:.1f}",
                   p.cx, p.cy, p.ax_ratio, p.orientation, p.freq, p.amp, p.r_inner, p.r_outer);
    } else if (*eval_detect) {
      const DatasetManifest m = read_manifest(manifest_path);
      const DetectionReport rep = evaluate_detection_file(m, read_detection_file(detections_path), iou_thresh);
      std::cout << format_detection_report(rep);
      if (!json_path.empty()) write_json(json_path, detection_report_json(rep));
    } else if (*eval_correct) {
      const ManifestOnDisk data = ManifestOnDisk::load(manifest_path);
      const auto ex = read_correction_exchange(corrections_path);
      const BinnedReport rep = binned_report(score_corrections(data, ex, corrections_path.parent_path(), jobs));
      std::cout << format_report(rep);
      if (!json_path.empty()) write_json(json_path, report_to_json(rep));
    } else if (*regional) {
      const RegionalStdStudy study = regional_std_study(read_regional_listing(listing_path));
      std::cout << format_regional_std(study);
      if (!json_path.empty()) write_json(json_path, regional_std_json(study));
    } else if (*gallery) {
      const ManifestOnDisk data = ManifestOnDisk::load(manifest_path);
      std::optional<CorrectionExchange> ex;
      if (!corrections_path.empty()) ex = read_correction_exchange(corrections_path);
      const auto files = cmd_gallery(data, out, ex ? &*ex : nullptr, corrections_path.parent_path());
      spdlog::info("wrote {} panel file(s) to {}", files.size(), out.string());
    } else if (*phantom) {
      if (dims[0] < 32 || dims[1] < 32 || dims[2] < 32) throw UsageError("phantom dims must be >= 32");
      save_volume(make_brain_phantom(dims[0], dims[1], dims[2], seed), out, NiftiType::Int16);
      spdlog::info("wrote {}x{}x{} phantom to {}", dims[0], dims[1], dims[2], out.string());
    } else if (*baseline) {
      const ManifestOnDisk data = ManifestOnDisk::load(manifest_path);
      std::optional<DetectionFile> dets;
      if (!detections_path.empty()) dets = read_detection_file(detections_path);
      cmd_baseline(data, out, sigma, dets ? &*dets : nullptr, jobs);
      spdlog::info("wrote {} corrections and {}", data.manifest.records.size(), (out / "corrections.json").string());
    }
  } catch (const UsageError& e) {
    spdlog::error("{}", e.what());
    return 2;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 1;
  }
  return 0;
}
