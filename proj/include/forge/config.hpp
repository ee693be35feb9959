#pragma once

#include "forge/composit.hpp"
#include "forge/morphwarp.hpp"
#include "forge/ripplegen.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace forge {

enum class BuildMode { Binned, Training };

/// Everything that shapes a synthesized dataset. Loaded from an INI-style
/// file with [input], [sampling], [build], [warp], [rois] and [ripple]
/// sections; the resolved values are embedded in every manifest.
struct BuildConfig {
  std::vector<std::string> volumes;  // as written in the file
  std::filesystem::path base_dir;    // relative volume paths resolve against this

  int per_axis = 50;
  double min_slice_foreground = 0.05;

  BuildMode mode = BuildMode::Binned;
  int n_per_bin = 1000;
  int pairs_per_slice = 1;
  double ring_probability = 2.0 / 3.0;
  int stall_limit = 10000;

  double warp_epsilon = kDefaultWarpEpsilon;
  RoiSampling rois;
  double feather = 0.0;
  RippleSampling ripple;

  std::filesystem::path volume_path(std::size_t i) const;
};

/// Parses an INI config. Unknown sections or keys are a UsageError.
BuildConfig load_config(const std::filesystem::path& path);
BuildConfig parse_config(const std::string& text, const std::filesystem::path& base_dir = {});

/// Stable JSON snapshot of the resolved settings.
nlohmann::ordered_json config_snapshot(const BuildConfig& cfg);

}  // namespace forge
