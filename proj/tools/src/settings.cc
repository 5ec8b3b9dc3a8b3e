#include "wildloc_cli/settings.h"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <thread>

#include "wildloc/error.h"

namespace wildloc::cli {
namespace {

std::string_view Trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

[[noreturn]] void Bad(std::string_view key, std::string_view value) {
  throw Error(ErrorKind::kConfigError,
              "invalid value for " + std::string(key) + ": '" +
                  std::string(value) + "'");
}

double ToDouble(std::string_view key, std::string_view v) {
  double out = 0.0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) Bad(key, v);
  return out;
}

long long ToInt(std::string_view key, std::string_view v) {
  long long out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) Bad(key, v);
  return out;
}

bool ToBool(std::string_view key, std::string_view v) {
  if (v == "true" || v == "1" || v == "on" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "off" || v == "no") return false;
  Bad(key, v);
}

using Setter = std::function<void(Settings&, std::string_view key,
                                  std::string_view value)>;

const std::vector<std::pair<std::string, Setter>>& Table() {
  static const std::vector<std::pair<std::string, Setter>> table = {
      {"yaw_correction",
       [](Settings& s, auto k, auto v) {
         s.localizer.yaw_correction_deg = ToDouble(k, v);
       }},
      {"min_raw_matches",
       [](Settings& s, auto k, auto v) {
         s.localizer.min_raw_matches = static_cast<int>(ToInt(k, v));
       }},
      {"min_inliers",
       [](Settings& s, auto k, auto v) {
         s.localizer.min_inliers = static_cast<int>(ToInt(k, v));
       }},
      {"ransac_threshold",
       [](Settings& s, auto k, auto v) {
         s.localizer.ransac.threshold_px = ToDouble(k, v);
       }},
      {"ransac_iters",
       [](Settings& s, auto k, auto v) {
         s.localizer.ransac.max_iters = static_cast<int>(ToInt(k, v));
       }},
      {"ransac_confidence",
       [](Settings& s, auto k, auto v) {
         s.localizer.ransac.confidence = ToDouble(k, v);
       }},
      {"seed",
       [](Settings& s, auto k, auto v) {
         const long long seed = ToInt(k, v);
         if (seed < 0) Bad(k, v);
         s.localizer.ransac.seed = static_cast<std::uint64_t>(seed);
       }},
      {"reprojection",
       [](Settings& s, auto k, auto v) {
         if (v == "forward") {
           s.localizer.ransac.mode = ReprojectionMode::kForward;
         } else if (v == "symmetric") {
           s.localizer.ransac.mode = ReprojectionMode::kSymmetric;
         } else {
           Bad(k, v);
         }
       }},
      {"matcher",
       [](Settings& s, auto k, auto v) {
         if (v == "builtin") {
           s.localizer.matcher.kind = MatcherKind::kBuiltin;
         } else if (v == "external") {
           s.localizer.matcher.kind = MatcherKind::kExternal;
         } else {
           Bad(k, v);
         }
       }},
      {"matcher_cmd",
       [](Settings& s, auto, auto v) {
         s.localizer.matcher.external_command = std::string(v);
       }},
      {"fast_threshold",
       [](Settings& s, auto k, auto v) {
         s.localizer.matcher.fast_threshold = static_cast<int>(ToInt(k, v));
       }},
      {"max_keypoints",
       [](Settings& s, auto k, auto v) {
         s.localizer.matcher.max_keypoints = static_cast<int>(ToInt(k, v));
       }},
      {"ratio",
       [](Settings& s, auto k, auto v) {
         s.localizer.matcher.ratio = ToDouble(k, v);
       }},
      {"cross_check",
       [](Settings& s, auto k, auto v) {
         s.localizer.matcher.cross_check = ToBool(k, v);
       }},
      {"resize_levels",
       [](Settings& s, auto k, auto v) {
         s.localizer.resize_levels = static_cast<int>(ToInt(k, v));
       }},
      {"center_mode",
       [](Settings& s, auto k, auto v) {
         if (v == "quad-mean") {
           s.localizer.center_mode = CenterMode::kQuadMean;
         } else if (v == "h-center") {
           s.localizer.center_mode = CenterMode::kHomographyCenter;
         } else {
           Bad(k, v);
         }
       }},
      {"selection",
       [](Settings& s, auto k, auto v) {
         if (v == "raw") {
           s.localizer.selection = TileSelection::kRawMatches;
         } else if (v == "inliers") {
           s.localizer.selection = TileSelection::kInliers;
         } else {
           Bad(k, v);
         }
       }},
      {"jobs",
       [](Settings& s, auto k, auto v) {
         s.localizer.jobs = static_cast<int>(ToInt(k, v));
       }},
      {"threshold_m",
       [](Settings& s, auto k, auto v) {
         s.threshold_m = ToDouble(k, v);
         if (!(s.threshold_m > 0.0)) Bad(k, v);
       }},
  };
  return table;
}

}  // namespace

Settings DefaultSettings() {
  Settings s;
  s.localizer.jobs =
      std::max(1, static_cast<int>(std::thread::hardware_concurrency()));
  return s;
}

void ApplySetting(Settings& s, std::string_view key, std::string_view value) {
  for (const auto& [name, setter] : Table()) {
    if (name == key) {
      setter(s, key, value);
      return;
    }
  }
  throw Error(ErrorKind::kConfigError, "unknown key: " + std::string(key));
}

void ApplyConfigFile(Settings& s, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIoError, path.string());
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    std::string_view view = line;
    if (const auto hash = view.find('#'); hash != std::string_view::npos) {
      view = view.substr(0, hash);
    }
    view = Trim(view);
    if (view.empty()) continue;
    const auto eq = view.find('=');
    if (eq == std::string_view::npos) {
      throw Error(ErrorKind::kConfigError,
                  path.string() + ":" + std::to_string(number) +
                      ": expected key = value");
    }
    ApplySetting(s, Trim(view.substr(0, eq)), Trim(view.substr(eq + 1)));
  }
}

const std::vector<std::string>& SettingKeys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> out;
    for (const auto& entry : Table()) out.push_back(entry.first);
    return out;
  }();
  return keys;
}

}  // namespace wildloc::cli
