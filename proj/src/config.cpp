#include "forge/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace forge {
namespace pt = boost::property_tree;

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_value(const std::string& key, const std::string& raw) {
  std::istringstream in(raw);
  T value;
  in >> value;
  if (!in || !(in >> std::ws).eof()) throw UsageError("config key '" + key + "': cannot parse '" + raw + "'");
  return value;
}

}  // namespace

std::filesystem::path BuildConfig::volume_path(std::size_t i) const {
  std::filesystem::path p = volumes.at(i);
  return p.is_absolute() || base_dir.empty() ? p : base_dir / p;
}

BuildConfig parse_config(const std::string& text, const std::filesystem::path& base_dir) {
  pt::ptree tree;
  std::istringstream in(text);
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw UsageError("malformed config at line " + std::to_string(e.line()) + ": " + e.message());
  }

  BuildConfig cfg;
  cfg.base_dir = base_dir;

  using Setter = std::function<void(const std::string&, const std::string&)>;
  auto num = [](auto& field) -> Setter {
    return [&field](const std::string& key, const std::string& raw) {
      field = parse_value<std::remove_reference_t<decltype(field)>>(key, raw);
    };
  };
  const std::map<std::string, Setter> setters{
      {"input.volumes",
       [&cfg](const std::string&, const std::string& raw) {
         cfg.volumes.clear();
         std::istringstream list(raw);
         for (std::string item; std::getline(list, item, ',');)
           if (!trim(item).empty()) cfg.volumes.push_back(trim(item));
       }},
      {"sampling.per_axis", num(cfg.per_axis)},
      {"sampling.min_slice_foreground", num(cfg.min_slice_foreground)},
      {"build.mode",
       [&cfg](const std::string& key, const std::string& raw) {
         if (raw == "binned")
           cfg.mode = BuildMode::Binned;
         else if (raw == "training")
           cfg.mode = BuildMode::Training;
         else
           throw UsageError("config key '" + key + "' must be 'binned' or 'training'");
       }},
      {"build.n_per_bin", num(cfg.n_per_bin)},
      {"build.pairs_per_slice", num(cfg.pairs_per_slice)},
      {"build.ring_probability", num(cfg.ring_probability)},
      {"build.stall_limit", num(cfg.stall_limit)},
      {"warp.epsilon", num(cfg.warp_epsilon)},
      {"rois.count_min", num(cfg.rois.count_min)},
      {"rois.count_max", num(cfg.rois.count_max)},
      {"rois.radius_min", num(cfg.rois.radius_min)},
      {"rois.radius_max", num(cfg.rois.radius_max)},
      {"rois.min_foreground_fraction", num(cfg.rois.min_foreground_fraction)},
      {"rois.tries_per_roi", num(cfg.rois.tries_per_roi)},
      {"rois.feather", num(cfg.feather)},
      {"ripple.center_margin", num(cfg.ripple.center_margin)},
      {"ripple.ax_ratio_min", num(cfg.ripple.ax_ratio_min)},
      {"ripple.ax_ratio_max", num(cfg.ripple.ax_ratio_max)},
      {"ripple.freq_min", num(cfg.ripple.freq_min)},
      {"ripple.freq_max", num(cfg.ripple.freq_max)},
      {"ripple.amp_min", num(cfg.ripple.amp_min)},
      {"ripple.amp_max", num(cfg.ripple.amp_max)},
      {"ripple.r_inner_min", num(cfg.ripple.r_inner_min)},
      {"ripple.r_inner_max", num(cfg.ripple.r_inner_max)},
      {"ripple.width_min", num(cfg.ripple.width_min)},
      {"ripple.width_max", num(cfg.ripple.width_max)},
  };

  for (const auto& [section, entries] : tree) {
    if (entries.empty() && !entries.data().empty())
      throw UsageError("config key '" + section + "' must live inside a [section]");
    for (const auto& [key, value] : entries) {
      const std::string full = section + "." + key;
      auto it = setters.find(full);
      if (it == setters.end()) throw UsageError("unknown config key '" + full + "'");
      it->second(full, trim(value.data()));
    }
  }

  if (cfg.per_axis < 1) throw UsageError("sampling.per_axis must be >= 1");
  if (cfg.n_per_bin < 1) throw UsageError("build.n_per_bin must be >= 1");
  if (cfg.pairs_per_slice < 1) throw UsageError("build.pairs_per_slice must be >= 1");
  if (!(cfg.ring_probability >= 0.0 && cfg.ring_probability <= 1.0))
    throw UsageError("build.ring_probability must lie in [0, 1]");
  if (cfg.rois.count_min < 1 || cfg.rois.count_max < cfg.rois.count_min)
    throw UsageError("rois.count_min/count_max must satisfy 1 <= min <= max");
  if (!(cfg.rois.radius_min >= kMinRoiRadius && cfg.rois.radius_max >= cfg.rois.radius_min))
    throw UsageError("rois.radius_min/radius_max must satisfy 8 <= min <= max");
  return cfg;
}

BuildConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config '" + path.string() + "'");
  std::stringstream text;
  text << in.rdbuf();
  return parse_config(text.str(), path.parent_path());
}

nlohmann::ordered_json config_snapshot(const BuildConfig& cfg) {
  nlohmann::ordered_json j;
  j["input"]["volumes"] = cfg.volumes;
  j["sampling"]["per_axis"] = cfg.per_axis;
  j["sampling"]["min_slice_foreground"] = cfg.min_slice_foreground;
  j["build"]["mode"] = cfg.mode == BuildMode::Binned ? "binned" : "training";
  j["build"]["n_per_bin"] = cfg.n_per_bin;
  j["build"]["pairs_per_slice"] = cfg.pairs_per_slice;
  j["build"]["ring_probability"] = cfg.ring_probability;
  j["build"]["stall_limit"] = cfg.stall_limit;
  j["warp"]["epsilon"] = cfg.warp_epsilon;
  j["rois"]["count_min"] = cfg.rois.count_min;
  j["rois"]["count_max"] = cfg.rois.count_max;
  j["rois"]["radius_min"] = cfg.rois.radius_min;
  j["rois"]["radius_max"] = cfg.rois.radius_max;
  j["rois"]["min_foreground_fraction"] = cfg.rois.min_foreground_fraction;
  j["rois"]["tries_per_roi"] = cfg.rois.tries_per_roi;
  j["rois"]["feather"] = cfg.feather;
  const RippleSampling& r = cfg.ripple;
  j["ripple"] = {{"center_margin", r.center_margin}, {"ax_ratio_min", r.ax_ratio_min},
                 {"ax_ratio_max", r.ax_ratio_max},   {"freq_min", r.freq_min},
                 {"freq_max", r.freq_max},           {"amp_min", r.amp_min},
                 {"amp_max", r.amp_max},             {"r_inner_min", r.r_inner_min},
                 {"r_inner_max", r.r_inner_max},     {"width_min", r.width_min},
                 {"width_max", r.width_max}};
  return j;
}

}  // namespace forge
