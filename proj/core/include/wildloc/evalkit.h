#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "wildloc/localizer.h"

namespace wildloc {

inline constexpr std::string_view kResultsHeader =
    "filename,status,best_tile_id,raw_matches,inliers,lat,lon,error_m";
inline constexpr double kDefaultSuccessThresholdM = 50.0;

struct PhotoError {
  std::string filename;
  std::optional<double> error_m;  // absent unless localized
};

struct EvalSummary {
  int n_total = 0;
  int n_localized = 0;
  int n_success = 0;  // error strictly below the threshold
  double success_threshold_m = kDefaultSuccessThresholdM;
  // Mean error over the successes; absent when there are none.
  std::optional<double> mae_m;
  // Mean error over every localized photo, successful or not.
  std::optional<double> mae_all_m;
  std::vector<PhotoError> errors;
};

// Haversine distance between each localized result and its ground truth.
// `truth[i]` belongs to `results[i]`. Throws kMissingGroundTruth naming the
// photo when a localized result has no GNSS truth.
std::vector<PhotoError> ComputeErrors(
    std::span<const LocalizationResult> results,
    std::span<const PhotoMeta> truth);

EvalSummary Summarize(std::span<const PhotoError> errors, double threshold_m);

// Writes into `out_dir`:
//   results.csv      per-photo results (kResultsHeader)
//   summary.txt      key=value summary
//   error_plot.dat   "<photo_index> <error_m>" per localized photo
//   coords_plot.dat  "<lat> <lon> <gnss_lat> <gnss_lon>" per localized photo
// Output is byte-identical for identical inputs.
void EmitReport(std::span<const LocalizationResult> results,
                std::span<const PhotoMeta> truth, const EvalSummary& summary,
                const std::filesystem::path& out_dir);

}  // namespace wildloc
