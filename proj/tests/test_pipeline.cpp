#include "forge/io.hpp"
#include "forge/pipeline.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

#include <fstream>

using namespace forge;
namespace fs = std::filesystem;

namespace {

Image2D noise_image(std::uint64_t seed, Eigen::Index h, Eigen::Index w) {
  Rng rng(seed);
  Image2D img(h, w);
  for (Eigen::Index i = 0; i < img.size(); ++i) img.data()[i] = rng.uniform();
  return quantize16(img);
}

// Four records on 48x40 frames with hand-placed boxes; corrupted = clean plus
// noise inside the boxes.
struct TinyDataset {
  TempDir dir;
  ManifestOnDisk data;

  TinyDataset() {
    fs::create_directories(dir / "images");
    const std::vector<std::vector<BBox>> boxes{
        {{2, 3, 12, 13}}, {{10, 10, 30, 25}, {20, 5, 40, 15}}, {{0, 0, 8, 8}}, {{30, 20, 48, 40}}};
    for (std::size_t i = 0; i < boxes.size(); ++i) {
      SampleRecord r;
      r.sample_id = "0000000" + std::to_string(i);
      r.source_scan_id = "tiny";
      r.split = "test";
      r.boxes = boxes[i];
      r.clean_path = "images/" + r.sample_id + "_clean.png";
      r.corrupted_path = "images/" + r.sample_id + "_corrupted.png";
      const Image2D clean = Image2D::Constant(40, 48, 0.5);
      Image2D bad = clean;
      const Image2D noise = noise_image(i, 40, 48);
      for (const BBox& b : r.boxes)
        bad.block(b.y_min, b.x_min, b.height(), b.width()) = noise.block(b.y_min, b.x_min, b.height(), b.width());
      save_image(clean, dir / r.clean_path);
      save_image(bad, dir / r.corrupted_path);
      r.rmse = rmse(clean, quantize16(bad));
      r.psnr = psnr_from_rmse(r.rmse);
      r.psnr_bin = std::string(psnr_bin_label(r.psnr));
      data.manifest.records.push_back(r);
    }
    write_manifest(data.manifest, dir / "manifest.jsonl");
    data = ManifestOnDisk::load(dir / "manifest.jsonl");
  }
};

}  // namespace

TEST(CompositeCorrection, MembershipMatchesBoxes) {
  const Image2D a = noise_image(1, 30, 35);
  const Image2D b = noise_image(2, 30, 35);
  EXPECT_TRUE((composite_correction(a, b, {}) == a).all());
  EXPECT_TRUE((composite_correction(a, b, {{0, 0, 35, 30}}) == b).all());

  const std::vector<BBox> boxes{{3, 4, 10, 20}, {8, 15, 40, 40}, {-5, -5, 2, 2}};
  const Image2D c = composite_correction(a, b, boxes);
  for (Eigen::Index y = 0; y < 30; ++y)
    for (Eigen::Index x = 0; x < 35; ++x) {
      bool in = false;
      for (const BBox& box : boxes) in |= box.contains(x, y);
      ASSERT_EQ(c(y, x), in ? b(y, x) : a(y, x)) << x << "," << y;
    }
  EXPECT_THROW(composite_correction(a, noise_image(3, 30, 34), boxes), Error);
}

TEST(Baseline, IdentityAndInvariants) {
  const Image2D img = noise_image(4, 40, 50);
  const std::vector<BBox> boxes{{5, 5, 25, 30}, {20, 10, 45, 38}};
  EXPECT_TRUE((baseline_correct(img, boxes, 0.3) == img).all());
  EXPECT_THROW(baseline_correct(img, boxes, 0.0), UsageError);

  const Image2D flat = Image2D::Constant(40, 50, 0.37);
  EXPECT_LT((baseline_correct(flat, boxes, 2.0) - flat).abs().maxCoeff(), 1e-12);

  const Image2D blurred = baseline_correct(img, boxes, 1.5);
  for (Eigen::Index y = 0; y < 40; ++y)
    for (Eigen::Index x = 0; x < 50; ++x) {
      bool in = false;
      for (const BBox& b : boxes) in |= b.contains(x, y);
      if (!in) {
        ASSERT_EQ(blurred(y, x), img(y, x));
      }
    }
  for (const BBox& b : boxes) {
    const Image2D single = baseline_correct(img, {b}, 1.5);
    EXPECT_LT(regional_std(single, b), regional_std(img, b));
    // box mean is preserved: the mirrored kernel is doubly stochastic
    EXPECT_NEAR(single.block(b.y_min, b.x_min, b.height(), b.width()).mean(),
                img.block(b.y_min, b.x_min, b.height(), b.width()).mean(), 1e-12);
  }
}

TEST(DetectionFile, ParseAndValidate) {
  const DetectionFile d = parse_detection_file(R"({"a": [{"box": [1, 2, 5, 6], "score": 0.5}], "b": []})");
  ASSERT_EQ(d.size(), 2u);
  EXPECT_EQ(d.at("a")[0].box, (BBox{1, 2, 5, 6}));
  EXPECT_DOUBLE_EQ(d.at("a")[0].score, 0.5);
  EXPECT_THROW(parse_detection_file("not json"), UsageError);
  EXPECT_THROW(parse_detection_file("[]"), UsageError);
  EXPECT_THROW(parse_detection_file(R"({"a": [{"box": [5, 2, 1, 6], "score": 0.5}]})"), UsageError);
  EXPECT_THROW(parse_detection_file(R"({"a": [{"box": [1, 2, 5], "score": 0.5}]})"), UsageError);
  EXPECT_THROW(parse_detection_file(R"({"a": [{"box": [1.5, 2, 5, 6], "score": 0.5}]})"), UsageError);
  EXPECT_THROW(parse_detection_file(R"({"a": [{"box": [1, 2, 5, 6], "score": 1.5}]})"), UsageError);

  TempDir dir;
  write_detection_file(d, dir / "d.json");
  EXPECT_EQ(read_detection_file(dir / "d.json"), d);
}

TEST(EvalDetect, OracleEmptyAndUnknown) {
  const TinyDataset t;
  const DatasetManifest& m = t.data.manifest;
  DetectionFile gt;
  long n_boxes = 0;
  for (const SampleRecord& r : m.records)
    for (const BBox& b : r.boxes) {
      gt[r.sample_id].push_back({b, 0.9});
      ++n_boxes;
    }
  const DetectionReport perfect = evaluate_detection_file(m, gt, 0.5);
  EXPECT_DOUBLE_EQ(perfect.evaluation.average_precision, 1.0);
  EXPECT_EQ(perfect.evaluation.true_positives, n_boxes);
  EXPECT_EQ(perfect.image_ids.size(), m.records.size());

  const DetectionReport empty = evaluate_detection_file(m, {}, 0.5);
  EXPECT_DOUBLE_EQ(empty.evaluation.average_precision, 0.0);
  EXPECT_EQ(empty.evaluation.false_negatives, n_boxes);

  DetectionFile stray = gt;
  stray["nope"] = {{{0, 0, 2, 2}, 0.1}};
  try {
    evaluate_detection_file(m, stray);
    FAIL();
  } catch (const EvaluationError& e) {
    EXPECT_NE(std::string(e.what()).find("nope"), std::string::npos);
  }
  EXPECT_THROW(evaluate_detection_file(m, gt, 0.0), UsageError);

  const auto j = detection_report_json(perfect);
  EXPECT_DOUBLE_EQ(j["map"].get<double>(), 1.0);
  EXPECT_NE(format_detection_report(perfect).find("1.0000"), std::string::npos);
}

TEST(EvalCorrect, IdentityAndOracle) {
  const TinyDataset t;
  const ManifestOnDisk& data = t.data;
  TempDir ex_dir;
  CorrectionExchange identity, oracle_ex, crops;
  for (const SampleRecord& r : data.manifest.records) {
    save_image(data.corrupted(r), ex_dir / (r.sample_id + "_id.png"));
    identity[r.sample_id].image = r.sample_id + "_id.png";
    save_image(data.clean(r), ex_dir / (r.sample_id + "_gt.png"));
    oracle_ex[r.sample_id].image = r.sample_id + "_gt.png";
    for (std::size_t k = 0; k < r.boxes.size(); ++k) {
      const BBox& b = r.boxes[k];
      const std::string name = r.sample_id + "_crop" + std::to_string(k) + ".png";
      save_image(data.clean(r).block(b.y_min, b.x_min, b.height(), b.width()), ex_dir / name);
      crops[r.sample_id].crops.emplace_back(b, name);
    }
  }

  const auto id_scores = score_corrections(data, identity, ex_dir.path(), 2);
  for (const CorrectionScore& s : id_scores) EXPECT_EQ(s.rmse_corrected, s.rmse_degraded);
  const BinnedReport id_report = binned_report(id_scores);
  for (const BinRow& row : id_report.rows) {
    if (row.count == 0) continue;
    EXPECT_DOUBLE_EQ(row.rmse_reduction_pct, 0.0);
    ASSERT_TRUE(row.psnr_gain_db);
    EXPECT_DOUBLE_EQ(*row.psnr_gain_db, 0.0);
  }

  for (const CorrectionExchange* ex : {&oracle_ex, &crops}) {
    const auto scores = score_corrections(data, *ex, ex_dir.path());
    for (const CorrectionScore& s : scores) {
      EXPECT_EQ(s.rmse_corrected, 0.0);
      EXPECT_TRUE(std::isinf(s.psnr_corrected));
    }
    for (const BinRow& row : binned_report(scores).rows)
      if (row.count > 0) {
        EXPECT_DOUBLE_EQ(row.rmse_reduction_pct, 100.0);
        EXPECT_EQ(row.psnr_infinite, row.count);
      }
  }

  CorrectionExchange partial = identity;
  partial.erase(data.manifest.records[1].sample_id);
  try {
    score_corrections(data, partial, ex_dir.path());
    FAIL();
  } catch (const EvaluationError& e) {
    EXPECT_NE(std::string(e.what()).find(data.manifest.records[1].sample_id), std::string::npos);
  }

  write_correction_exchange(crops, ex_dir / "ex.json");
  EXPECT_EQ(read_correction_exchange(ex_dir / "ex.json").size(), crops.size());
}

TEST(EvalCorrect, RejectsMalformedExchange) {
  TempDir dir;
  std::ofstream(dir / "both.json") << R"({"a": {"image": "x.png", "crops": [{"box": [0,0,1,1], "image": "y.png"}]}})";
  EXPECT_THROW(read_correction_exchange(dir / "both.json"), UsageError);
  std::ofstream(dir / "none.json") << R"({"a": {}})";
  EXPECT_THROW(read_correction_exchange(dir / "none.json"), UsageError);

  const Image2D degraded = noise_image(5, 20, 20);
  save_image(noise_image(6, 20, 21), dir / "wrong.png");
  CorrectionEntry e;
  e.image = "wrong.png";
  EXPECT_THROW(resolve_correction(e, degraded, dir.path()), EvaluationError);
  save_image(noise_image(6, 4, 4), dir / "crop.png");
  CorrectionEntry c;
  c.crops.emplace_back(BBox{0, 0, 5, 4}, "crop.png");
  EXPECT_THROW(resolve_correction(c, degraded, dir.path()), EvaluationError);
}

TEST(Baseline, CommandWritesExchange) {
  const TinyDataset t;
  TempDir out;
  const CorrectionExchange ex = cmd_baseline(t.data, out.path(), 1.5);
  EXPECT_EQ(ex.size(), t.data.manifest.records.size());
  EXPECT_TRUE(fs::exists(out / "corrections.json"));
  const auto scores = score_corrections(t.data, read_correction_exchange(out / "corrections.json"), out.path());
  for (const CorrectionScore& s : scores) EXPECT_LT(s.rmse_corrected, s.rmse_degraded);
}

TEST(RegionalStd, StudyAndDegenerateCases) {
  TempDir dir;
  const Image2D before = noise_image(7, 32, 32);
  save_image(before, dir / "before.png");
  save_image(baseline_correct(before, {{0, 0, 32, 32}}, 1.5), dir / "after.png");
  std::ofstream(dir / "list.csv") << "before,after,x0,y0,x1,y1\n# comment\n"
                                  << "before.png,after.png,0,0,10,10\n"
                                  << "before.png,after.png,10,10,30,30\n"
                                  << "before.png,after.png,5,15,25,30\n";
  const RegionalStdStudy study = regional_std_study(read_regional_listing(dir / "list.csv"));
  ASSERT_EQ(study.rows.size(), 3u);
  EXPECT_LT(study.test.percent_change, 0.0);
  EXPECT_DOUBLE_EQ(study.rows[0].std_before, oracle::two_pass_std(before, {0, 0, 10, 10}));
  EXPECT_NE(format_regional_std(study).find("std before"), std::string::npos);
  EXPECT_EQ(regional_std_json(study)["boxes"].size(), 3u);

  std::ofstream(dir / "one.csv") << "before.png,after.png,0,0,10,10\n";
  EXPECT_THROW(regional_std_study(read_regional_listing(dir / "one.csv")), UsageError);
  std::ofstream(dir / "bad.csv") << "before.png,after.png,0,0,10\n";
  EXPECT_THROW(read_regional_listing(dir / "bad.csv"), UsageError);

  // identical images: the paired differences have no variance
  std::ofstream(dir / "same.csv") << "before.png,before.png,0,0,10,10\nbefore.png,before.png,3,3,9,9\n";
  EXPECT_THROW(regional_std_study(read_regional_listing(dir / "same.csv")), Error);
}

TEST(Gallery, StripLayout) {
  const TinyDataset t;
  TempDir out;
  const auto files = cmd_gallery(t.data, out.path());
  ASSERT_EQ(files.size(), t.data.manifest.records.size());
  const Image2D strip = load_image(files[0]);
  EXPECT_EQ(strip.rows(), 40);
  EXPECT_EQ(strip.cols(), 3 * 48);
  const SampleRecord& r = t.data.manifest.records[0];
  EXPECT_TRUE((strip.middleCols(0, 48) == t.data.clean(r)).all());
  EXPECT_TRUE((strip.middleCols(48, 48) == t.data.corrupted(r)).all());
}

TEST(DrawBoxes, OutlineOnly) {
  const Image2D img = Image2D::Zero(10, 12);
  const BBox b{2, 3, 7, 9};
  const Image2D out = draw_boxes(img, {b}, 0.8);
  for (Eigen::Index y = 0; y < 10; ++y)
    for (Eigen::Index x = 0; x < 12; ++x) {
      const bool edge = b.contains(x, y) && (x == b.x_min || x == b.x_max - 1 || y == b.y_min || y == b.y_max - 1);
      ASSERT_EQ(out(y, x), edge ? 0.8 : 0.0) << x << "," << y;
    }
}
