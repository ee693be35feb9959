#pragma once

#include "forge/composit.hpp"
#include "forge/config.hpp"
#include "forge/core.hpp"
#include "forge/morphwarp.hpp"
#include "forge/random.hpp"
#include "forge/ringgen.hpp"
#include "forge/ripplegen.hpp"

#include <json.hpp>

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace forge {

inline constexpr std::string_view kManifestSchema = "forge.manifest/1";
inline constexpr std::string_view kToolkitVersion = "0.1.0";

enum class GeneratorKind { Ring, Ripple };

std::string_view to_string(GeneratorKind kind);
GeneratorKind generator_from_string(std::string_view name);

/// PSNR intervals of the binned test set, lowest first.
inline constexpr std::array<std::string_view, 5> kPsnrBins{"<17", "[17,18)", "[18,19)", "[19,20)",
                                                           "[20,21)"};
inline constexpr std::string_view kUnbinned = ">=21";

/// Index into kPsnrBins, or nothing for PSNR >= 21 dB (including +inf).
std::optional<std::size_t> psnr_bin(double psnr);
std::string_view psnr_bin_label(double psnr);

/// FNV-1a, used to key RNG substreams by scan id.
std::uint64_t hash_string(std::string_view s);

struct SliceSelection {
  std::vector<std::pair<Axis, Eigen::Index>> slices;  // grouped by axis, ascending index
  bool saturated = false;  // some axis yielded fewer than per_axis usable slices
};

/// Volume-wide Otsu level in stored intensity units.
double volume_foreground_level(const Volume3D& vol);

/// Fraction of a slice's pixels at or above `level`.
double slice_foreground_fraction(const Volume3D& vol, Axis axis, Eigen::Index index, double level);

/// Draws up to per_axis distinct slices along each axis, uniformly without
/// replacement, skipping slices whose foreground covers less than
/// `min_foreground` of the frame.
SliceSelection sample_slices(const Volume3D& vol, int per_axis, Rng& rng, double min_foreground = 0.05);

struct PoolSlice {
  std::string scan_id;
  Axis axis = Axis::Axial;
  Eigen::Index index = 0;
  Image2D image;  // normalized
};

/// Loads every configured volume and samples its slices. Saturated axes are
/// reported through `notes`.
std::vector<PoolSlice> build_pool(const BuildConfig& cfg, std::uint64_t master_seed,
                                  std::vector<std::string>& notes);

/// One clean/corrupted pair with everything needed to reproduce it.
struct PairResult {
  Image2D clean_variant;  // warped slice, on the 16-bit grid
  Image2D composited;     // clean_variant with the artifact inside the ROIs
  Image2D corrupted;      // composited, histogram matched, on the 16-bit grid
  GeneratorKind kind = GeneratorKind::Ring;
  int ring_base = -1;
  AnnularSectorParams ring;
  RippleParams ripple;
  std::vector<WarpCircle> warp;
  std::vector<CircleROI> rois;
  std::vector<BBox> boxes;
  double psnr = 0.0;
  double rmse = 0.0;
};

/// Warps the slice, draws ring (probability cfg.ring_probability) or ripple
/// corruption, composites it through random ROIs and histogram matches the
/// result to the clean variant. Both output images are quantized before
/// PSNR and RMSE are measured, so the values recompute exactly from PNGs.
PairResult make_pair(const Image2D& slice, Rng& rng, const BuildConfig& cfg = {});

struct SampleRecord {
  std::string sample_id;
  std::string source_scan_id;
  Axis axis = Axis::Axial;
  long slice_index = 0;
  std::string split;  // "test", "train" or "val"
  GeneratorKind kind = GeneratorKind::Ring;
  int ring_base = -1;  // index into base_combinations(), ring only
  AnnularSectorParams ring;
  RippleParams ripple;
  std::vector<WarpCircle> warp;
  std::vector<CircleROI> rois;
  std::vector<BBox> boxes;
  std::string clean_path;  // relative to the manifest directory
  std::string corrupted_path;
  double psnr = 0.0;
  double rmse = 0.0;
  std::string psnr_bin;
  std::uint64_t seed = 0;

  bool operator==(const SampleRecord&) const = default;
};

struct DatasetManifest {
  std::string toolkit_version{kToolkitVersion};
  std::uint64_t master_seed = 0;
  nlohmann::ordered_json config = nlohmann::ordered_json::object();
  std::vector<std::string> notes;
  std::vector<SampleRecord> records;

  bool operator==(const DatasetManifest& other) const;
  const SampleRecord* find(std::string_view sample_id) const;
};

/// Called once per accepted sample, in sample_id order, on the calling thread.
using SampleSink = std::function<void(const SampleRecord&, const PairResult&)>;

struct BuildProgress {
  std::array<int, 5> filled{};
  long attempts = 0;
};
using ProgressFn = std::function<void(const BuildProgress&)>;

/// Rejection-samples pairs from the pool until every PSNR bin holds
/// n_per_bin records. Attempt a draws its slice and its pair substream from
/// (master seed, a) alone and attempts are accepted in order, so the result
/// does not depend on `jobs`. No scan contributes more than 3 * per_axis
/// records. Throws when cfg.stall_limit consecutive
/// attempts add nothing, naming the starving bin.
DatasetManifest build_binned_testset(const std::vector<PoolSlice>& pool, int n_per_bin,
                                     std::uint64_t master_seed, const BuildConfig& cfg, int jobs = 1,
                                     const SampleSink& sink = {}, const ProgressFn& progress = {});

/// pairs_per_slice pairs from every pool slice with no PSNR filter; records
/// carry a 4:1 train/val flag.
DatasetManifest build_training_set(const std::vector<PoolSlice>& pool, int pairs_per_slice,
                                   std::uint64_t master_seed, const BuildConfig& cfg, int jobs = 1,
                                   const SampleSink& sink = {});

nlohmann::ordered_json record_to_json(const SampleRecord& r);
SampleRecord record_from_json(const nlohmann::ordered_json& j);

/// JSON lines: a header object, then one record per line.
void write_manifest(const DatasetManifest& m, std::ostream& out);
void write_manifest(const DatasetManifest& m, const std::filesystem::path& path);
DatasetManifest read_manifest(std::istream& in);
DatasetManifest read_manifest(const std::filesystem::path& path);

}  // namespace forge
