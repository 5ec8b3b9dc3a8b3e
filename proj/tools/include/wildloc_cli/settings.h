#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "wildloc/localizer.h"

namespace wildloc::cli {

// Everything a subcommand can be configured with. Built from defaults, then
// a key = value file, then command-line flags.
struct Settings {
  LocalizerConfig localizer;
  double threshold_m = 50.0;
};

// Defaults with jobs = available parallelism.
Settings DefaultSettings();

// Applies one `key = value` entry. Throws kConfigError on an unknown key
// or a malformed value.
void ApplySetting(Settings& s, std::string_view key, std::string_view value);

// Reads a key = value file; '#' starts a comment, blank lines are ignored.
void ApplyConfigFile(Settings& s, const std::filesystem::path& path);

// Keys accepted by ApplySetting, in documentation order.
const std::vector<std::string>& SettingKeys();

}  // namespace wildloc::cli
