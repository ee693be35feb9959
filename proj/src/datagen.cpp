#include "forge/datagen.hpp"

#include "forge/io.hpp"
#include "forge/metrics.hpp"
#include "forge/parallel.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>

namespace forge {
namespace {

using ojson = nlohmann::ordered_json;

// Substream tags.
constexpr std::uint64_t kSliceTag = 0x736c696365ULL;
constexpr std::uint64_t kPickTag = 0x7069636bULL;
constexpr std::uint64_t kSplitTag = 0x73706c6974ULL;

std::string sample_id(long n) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%08ld", n);
  return buf;
}

std::uint64_t pair_seed(std::uint64_t master, const PoolSlice& s, long attempt) {
  return derive_seed(master, {hash_string(s.scan_id), static_cast<std::uint64_t>(s.axis),
                              static_cast<std::uint64_t>(s.index), static_cast<std::uint64_t>(attempt)});
}

SampleRecord make_record(const PoolSlice& s, long n, std::uint64_t seed, const PairResult& pair) {
  SampleRecord r;
  r.sample_id = sample_id(n);
  r.source_scan_id = s.scan_id;
  r.axis = s.axis;
  r.slice_index = static_cast<long>(s.index);
  r.kind = pair.kind;
  r.ring_base = pair.ring_base;
  r.ring = pair.ring;
  r.ripple = pair.ripple;
  r.warp = pair.warp;
  r.rois = pair.rois;
  r.boxes = pair.boxes;
  r.clean_path = "images/" + r.sample_id + "_clean.png";
  r.corrupted_path = "images/" + r.sample_id + "_corrupted.png";
  r.psnr = pair.psnr;
  r.rmse = pair.rmse;
  r.psnr_bin = std::string(psnr_bin_label(pair.psnr));
  r.seed = seed;
  return r;
}

std::string skip_note(long n, const PoolSlice& s, const std::string& what) {
  return "attempt " + sample_id(n) + " (" + s.scan_id + " " + std::string(to_string(s.axis)) + " " +
         std::to_string(s.index) + ") skipped: " + what;
}

// Outcome of one attempt computed on a worker thread.
struct Attempt {
  std::optional<PairResult> pair;
  std::string error;
};

Attempt run_attempt(const PoolSlice& s, std::uint64_t seed, const BuildConfig& cfg) {
  Attempt a;
  try {
    Rng rng(seed);
    a.pair = make_pair(s.image, rng, cfg);
  } catch (const Error& e) {
    a.error = e.what();
  }
  return a;
}

}  // namespace

std::string_view to_string(GeneratorKind kind) { return kind == GeneratorKind::Ring ? "ring" : "ripple"; }

GeneratorKind generator_from_string(std::string_view name) {
  if (name == "ring") return GeneratorKind::Ring;
  if (name == "ripple") return GeneratorKind::Ripple;
  throw Error("unknown generator kind '" + std::string(name) + "'");
}

std::optional<std::size_t> psnr_bin(double psnr) {
  if (!(psnr < 21.0)) return std::nullopt;
  if (psnr < 17.0) return 0;
  return static_cast<std::size_t>(std::floor(psnr)) - 16;
}

std::string_view psnr_bin_label(double psnr) {
  const auto b = psnr_bin(psnr);
  return b ? kPsnrBins[*b] : kUnbinned;
}

std::uint64_t hash_string(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

double volume_foreground_level(const Volume3D& vol) {
  if (vol.data.empty()) throw Error("empty volume");
  const auto [lo_it, hi_it] = std::minmax_element(vol.data.begin(), vol.data.end());
  const double lo = *lo_it, hi = *hi_it;
  if (!(hi > lo)) return std::numeric_limits<double>::infinity();
  const Eigen::Map<const Image2D> flat(vol.data.data(), 1, static_cast<Eigen::Index>(vol.data.size()));
  return lo + otsu_threshold(normalize(flat)) * (hi - lo);
}

double slice_foreground_fraction(const Volume3D& vol, Axis axis, Eigen::Index index, double level) {
  const Image2D plane = raw_slice(vol, axis, index);
  return static_cast<double>((plane >= level).count()) / static_cast<double>(plane.size());
}

SliceSelection sample_slices(const Volume3D& vol, int per_axis, Rng& rng, double min_foreground) {
  SliceSelection sel;
  const double level = volume_foreground_level(vol);
  for (Axis axis : kAllAxes) {
    const Eigen::Index extent = vol.extent(axis);
    std::vector<Eigen::Index> order(static_cast<std::size_t>(extent));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    for (std::size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(i) - 1))]);

    std::vector<Eigen::Index> chosen;
    for (Eigen::Index idx : order) {
      if (static_cast<int>(chosen.size()) == per_axis) break;
      if (slice_foreground_fraction(vol, axis, idx, level) >= min_foreground) chosen.push_back(idx);
    }
    if (static_cast<int>(chosen.size()) < per_axis) sel.saturated = true;
    std::sort(chosen.begin(), chosen.end());
    for (Eigen::Index idx : chosen) sel.slices.emplace_back(axis, idx);
  }
  return sel;
}

std::vector<PoolSlice> build_pool(const BuildConfig& cfg, std::uint64_t master_seed,
                                  std::vector<std::string>& notes) {
  if (cfg.volumes.empty()) throw UsageError("config lists no input volumes");
  std::vector<PoolSlice> pool;
  std::map<std::string, int> seen;
  for (std::size_t v = 0; v < cfg.volumes.size(); ++v) {
    const std::filesystem::path path = cfg.volume_path(v);
    std::string scan_id = path.filename().string();
    for (std::string_view ext : {".gz", ".nii"})
      if (scan_id.ends_with(ext)) scan_id.resize(scan_id.size() - ext.size());
    if (const int n = seen[scan_id]++; n > 0) scan_id += "#" + std::to_string(n);

    const Volume3D vol = load_volume(path);
    Rng rng(derive_seed(master_seed, {kSliceTag, hash_string(scan_id)}));
    const SliceSelection sel = sample_slices(vol, cfg.per_axis, rng, cfg.min_slice_foreground);
    if (sel.saturated)
      notes.push_back("scan " + scan_id + ": fewer than " + std::to_string(cfg.per_axis) +
                      " usable slices on some axis; took all of them");
    for (const auto& [axis, idx] : sel.slices) pool.push_back({scan_id, axis, idx, extract_slice(vol, axis, idx)});
  }
  return pool;
}

PairResult make_pair(const Image2D& slice, Rng& rng, const BuildConfig& cfg) {
  if (!(slice.maxCoeff() > 0.0)) throw Error("slice has no foreground");
  PairResult p;
  p.warp = place_circles(rng, slice.cols(), slice.rows(), cfg.warp_epsilon);
  p.clean_variant = quantize16(warp_image(slice, p.warp));

  Image2D artifact;
  if (rng.bernoulli(cfg.ring_probability)) {
    p.kind = GeneratorKind::Ring;
    const auto bases = base_combinations();
    p.ring_base = static_cast<int>(rng.uniform_int(0, static_cast<std::int64_t>(bases.size()) - 1));
    p.ring = jitter_params(bases[static_cast<std::size_t>(p.ring_base)], rng);
    artifact = gen_ring_artifact_image(p.clean_variant, p.ring);
  } else {
    p.kind = GeneratorKind::Ripple;
    p.ripple = sample_ripple_params(rng, slice.cols(), slice.rows(), cfg.ripple);
    artifact = gen_ripple_artifact_image(p.clean_variant, p.ripple);
  }

  p.rois = sample_rois(rng, p.clean_variant, cfg.rois);
  p.boxes = rois_to_bboxes(p.rois, slice.cols(), slice.rows());
  p.composited = composite(p.clean_variant, artifact, p.rois, cfg.feather);
  p.corrupted = quantize16(histogram_match(p.composited, p.clean_variant));
  p.rmse = rmse(p.clean_variant, p.corrupted);
  p.psnr = psnr_from_rmse(p.rmse);
  return p;
}

bool DatasetManifest::operator==(const DatasetManifest& other) const {
  return toolkit_version == other.toolkit_version && master_seed == other.master_seed &&
         config == other.config && notes == other.notes && records == other.records;
}

const SampleRecord* DatasetManifest::find(std::string_view id) const {
  auto it = std::lower_bound(records.begin(), records.end(), id,
                             [](const SampleRecord& r, std::string_view key) { return r.sample_id < key; });
  if (it != records.end() && it->sample_id == id) return &*it;
  for (const SampleRecord& r : records)  // unsorted manifests from elsewhere
    if (r.sample_id == id) return &r;
  return nullptr;
}

DatasetManifest build_binned_testset(const std::vector<PoolSlice>& pool, int n_per_bin,
                                     std::uint64_t master_seed, const BuildConfig& cfg, int jobs,
                                     const SampleSink& sink, const ProgressFn& progress) {
  if (n_per_bin < 1) throw UsageError("n_per_bin must be >= 1");
  if (pool.empty()) throw Error("slice pool is empty");

  DatasetManifest m;
  m.master_seed = master_seed;
  m.config = config_snapshot(cfg);

  BuildProgress state;
  long since_progress = 0;
  const int per_scan_cap = 3 * cfg.per_axis;
  std::map<std::string, int> per_scan;
  const std::size_t batch = 16 * static_cast<std::size_t>(std::max(1, jobs));
  std::vector<const PoolSlice*> slices(batch);
  std::vector<std::uint64_t> seeds(batch);
  std::vector<Attempt> results(batch);

  auto done = [&] {
    return std::all_of(state.filled.begin(), state.filled.end(), [&](int f) { return f >= n_per_bin; });
  };
  while (!done()) {
    const long first = state.attempts;
    for (std::size_t i = 0; i < batch; ++i) {
      const long a = first + static_cast<long>(i);
      Rng pick(derive_seed(master_seed, {kPickTag, static_cast<std::uint64_t>(a)}));
      slices[i] = &pool[static_cast<std::size_t>(pick.uniform_int(0, static_cast<std::int64_t>(pool.size()) - 1))];
      seeds[i] = pair_seed(master_seed, *slices[i], a);
    }
    parallel_for(batch, jobs, [&](std::size_t i) { results[i] = run_attempt(*slices[i], seeds[i], cfg); });

    for (std::size_t i = 0; i < batch && !done(); ++i) {
      const long a = first + static_cast<long>(i);
      ++state.attempts;
      bool accepted = false;
      if (results[i].pair) {
        const PairResult& pair = *results[i].pair;
        const auto b = psnr_bin(pair.psnr);
        if (b && state.filled[*b] < n_per_bin && per_scan[slices[i]->scan_id] < per_scan_cap) {
          ++state.filled[*b];
          ++per_scan[slices[i]->scan_id];
          SampleRecord r = make_record(*slices[i], a, seeds[i], pair);
          r.split = "test";
          if (sink) sink(r, pair);
          m.records.push_back(std::move(r));
          accepted = true;
        }
      } else {
        m.notes.push_back(skip_note(a, *slices[i], results[i].error));
      }
      since_progress = accepted ? 0 : since_progress + 1;
      if (since_progress >= cfg.stall_limit) {
        std::size_t starving = 0;
        while (state.filled[starving] >= n_per_bin) ++starving;
        throw Error("PSNR bin fill stalled: no progress in " + std::to_string(cfg.stall_limit) +
                    " consecutive attempts; starving bin " + std::string(kPsnrBins[starving]) + " holds " +
                    std::to_string(state.filled[starving]) + " of " + std::to_string(n_per_bin));
      }
    }
    if (progress) progress(state);
  }
  return m;
}

DatasetManifest build_training_set(const std::vector<PoolSlice>& pool, int pairs_per_slice,
                                   std::uint64_t master_seed, const BuildConfig& cfg, int jobs,
                                   const SampleSink& sink) {
  if (pairs_per_slice < 1) throw UsageError("pairs_per_slice must be >= 1");
  DatasetManifest m;
  m.master_seed = master_seed;
  m.config = config_snapshot(cfg);

  const long total = static_cast<long>(pool.size()) * pairs_per_slice;
  const long batch = 16L * std::max(1, jobs);
  std::vector<Attempt> results(static_cast<std::size_t>(batch));
  for (long first = 0; first < total; first += batch) {
    const long count = std::min(batch, total - first);
    auto slice_of = [&](long n) -> const PoolSlice& { return pool[static_cast<std::size_t>(n / pairs_per_slice)]; };
    parallel_for(static_cast<std::size_t>(count), jobs, [&](std::size_t i) {
      const long n = first + static_cast<long>(i);
      results[i] = run_attempt(slice_of(n), pair_seed(master_seed, slice_of(n), n % pairs_per_slice), cfg);
    });
    for (long i = 0; i < count; ++i) {
      const long n = first + i;
      const Attempt& res = results[static_cast<std::size_t>(i)];
      if (!res.pair) {
        m.notes.push_back(skip_note(n, slice_of(n), res.error));
        continue;
      }
      SampleRecord r = make_record(slice_of(n), n, pair_seed(master_seed, slice_of(n), n % pairs_per_slice), *res.pair);
      r.split = derive_seed(master_seed, {kSplitTag, static_cast<std::uint64_t>(n)}) % 5 == 0 ? "val" : "train";
      if (sink) sink(r, *res.pair);
      m.records.push_back(std::move(r));
    }
  }
  return m;
}

// ---- manifest serialization ----

namespace {

ojson psnr_to_json(double v) { return std::isfinite(v) ? ojson(v) : ojson(nullptr); }
double psnr_from_json(const ojson& j) {
  return j.is_null() ? std::numeric_limits<double>::infinity() : j.get<double>();
}

}  // namespace

ojson record_to_json(const SampleRecord& r) {
  ojson j;
  j["sample_id"] = r.sample_id;
  j["source_scan_id"] = r.source_scan_id;
  j["axis"] = to_string(r.axis);
  j["slice_index"] = r.slice_index;
  j["split"] = r.split;
  j["kind"] = to_string(r.kind);
  if (r.kind == GeneratorKind::Ring) {
    j["params"] = {{"base", r.ring_base},
                   {"r_inner", r.ring.r_inner},
                   {"r_outer", r.ring.r_outer},
                   {"phase_shift", r.ring.phase_shift},
                   {"magnification", r.ring.magnification},
                   {"theta_start", r.ring.theta_start},
                   {"theta_end", r.ring.theta_end}};
  } else {
    const RippleParams& p = r.ripple;
    j["params"] = {{"cx", p.cx},     {"cy", p.cy},           {"ax_ratio", p.ax_ratio},
                   {"orientation", p.orientation},          {"freq", p.freq},
                   {"wave_phase", p.wave_phase},            {"amp", p.amp},
                   {"r_inner", p.r_inner}, {"r_outer", p.r_outer}};
  }
  j["warp"] = ojson::array();
  for (const WarpCircle& c : r.warp)
    j["warp"].push_back({{"cx", c.cx}, {"cy", c.cy}, {"r", c.r}, {"epsilon", c.epsilon}});
  j["rois"] = ojson::array();
  for (const CircleROI& c : r.rois) j["rois"].push_back({{"cx", c.cx}, {"cy", c.cy}, {"r", c.r}});
  j["boxes"] = ojson::array();
  for (const BBox& b : r.boxes) j["boxes"].push_back({b.x_min, b.y_min, b.x_max, b.y_max});
  j["clean"] = r.clean_path;
  j["corrupted"] = r.corrupted_path;
  j["psnr"] = psnr_to_json(r.psnr);
  j["rmse"] = r.rmse;
  j["psnr_bin"] = r.psnr_bin;
  j["seed"] = r.seed;
  return j;
}

SampleRecord record_from_json(const ojson& j) {
  SampleRecord r;
  r.sample_id = j.at("sample_id").get<std::string>();
  r.source_scan_id = j.at("source_scan_id").get<std::string>();
  r.axis = axis_from_string(j.at("axis").get<std::string>());
  r.slice_index = j.at("slice_index").get<long>();
  r.split = j.at("split").get<std::string>();
  r.kind = generator_from_string(j.at("kind").get<std::string>());
  const ojson& p = j.at("params");
  if (r.kind == GeneratorKind::Ring) {
    r.ring_base = p.at("base").get<int>();
    r.ring = {p.at("r_inner").get<double>(),     p.at("r_outer").get<double>(),
              p.at("phase_shift").get<double>(), p.at("magnification").get<double>(),
              p.at("theta_start").get<double>(), p.at("theta_end").get<double>()};
  } else {
    r.ripple = {p.at("cx").get<double>(),   p.at("cy").get<double>(),         p.at("ax_ratio").get<double>(),
                p.at("orientation").get<double>(), p.at("freq").get<double>(), p.at("wave_phase").get<double>(),
                p.at("amp").get<double>(),  p.at("r_inner").get<double>(),    p.at("r_outer").get<double>()};
  }
  for (const ojson& c : j.at("warp"))
    r.warp.push_back({c.at("cx").get<double>(), c.at("cy").get<double>(), c.at("r").get<double>(),
                      c.at("epsilon").get<double>()});
  for (const ojson& c : j.at("rois"))
    r.rois.push_back({c.at("cx").get<double>(), c.at("cy").get<double>(), c.at("r").get<double>()});
  for (const ojson& b : j.at("boxes")) {
    if (!b.is_array() || b.size() != 4) throw Error("box must be [x0, y0, x1, y1]");
    r.boxes.push_back({b[0].get<int>(), b[1].get<int>(), b[2].get<int>(), b[3].get<int>()});
  }
  r.clean_path = j.at("clean").get<std::string>();
  r.corrupted_path = j.at("corrupted").get<std::string>();
  r.psnr = psnr_from_json(j.at("psnr"));
  r.rmse = j.at("rmse").get<double>();
  r.psnr_bin = j.at("psnr_bin").get<std::string>();
  r.seed = j.at("seed").get<std::uint64_t>();
  return r;
}

void write_manifest(const DatasetManifest& m, std::ostream& out) {
  ojson header;
  header["schema"] = kManifestSchema;
  header["toolkit_version"] = m.toolkit_version;
  header["master_seed"] = m.master_seed;
  header["record_count"] = m.records.size();
  header["config"] = m.config;
  header["notes"] = m.notes;
  out << header.dump() << '\n';
  for (const SampleRecord& r : m.records) out << record_to_json(r).dump() << '\n';
}

void write_manifest(const DatasetManifest& m, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write manifest '" + path.string() + "'");
  write_manifest(m, out);
  if (!out) throw Error("failed writing manifest '" + path.string() + "'");
}

DatasetManifest read_manifest(std::istream& in) {
  DatasetManifest m;
  std::string line;
  long line_no = 0;
  std::size_t expected = 0;
  auto fail = [&](const std::string& what) -> UsageError {
    return UsageError("manifest line " + std::to_string(line_no) + ": " + what);
  };

  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    try {
      const ojson j = ojson::parse(line);
      if (line_no == 1) {
        const std::string schema = j.at("schema").get<std::string>();
        if (schema != kManifestSchema)
          throw fail("unsupported schema '" + schema + "' (expected " + std::string(kManifestSchema) + ")");
        m.toolkit_version = j.at("toolkit_version").get<std::string>();
        m.master_seed = j.at("master_seed").get<std::uint64_t>();
        expected = j.at("record_count").get<std::size_t>();
        m.config = j.at("config");
        m.notes = j.at("notes").get<std::vector<std::string>>();
      } else {
        m.records.push_back(record_from_json(j));
      }
    } catch (const nlohmann::json::exception& e) {
      throw fail(e.what());
    } catch (const UsageError&) {
      throw;
    } catch (const Error& e) {
      throw fail(e.what());
    }
  }
  if (line_no == 0) throw UsageError("manifest is empty (missing header line)");
  if (m.records.size() != expected)
    throw UsageError("manifest header announces " + std::to_string(expected) + " records but " +
                     std::to_string(m.records.size()) + " follow");
  return m;
}

DatasetManifest read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot open manifest '" + path.string() + "'");
  return read_manifest(in);
}

}  // namespace forge
