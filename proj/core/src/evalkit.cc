#include "wildloc/evalkit.h"

#include <algorithm>
#include <fstream>

#include "csv.h"
#include "wildloc/error.h"
#include "wildloc/geo.h"

namespace wildloc {
namespace {

std::ofstream OpenOut(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::kIoError, path.string());
  return out;
}

void Finish(std::ofstream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) throw Error(ErrorKind::kIoError, path.string());
}

// Incremental mean; exact when every value is equal.
double RunningMean(const std::vector<double>& values) {
  double mean = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    mean += (values[i] - mean) / static_cast<double>(i + 1);
  }
  return mean;
}

}  // namespace

std::vector<PhotoError> ComputeErrors(
    std::span<const LocalizationResult> results,
    std::span<const PhotoMeta> truth) {
  if (results.size() != truth.size()) {
    throw Error(ErrorKind::kInvalidArgument,
                std::to_string(results.size()) + " results but " +
                    std::to_string(truth.size()) + " ground-truth rows");
  }
  std::vector<PhotoError> errors;
  errors.reserve(results.size());
  for (std::size_t i = 0; i < results.size(); ++i) {
    const LocalizationResult& r = results[i];
    PhotoError e{r.photo, std::nullopt};
    if (r.status == LocalizationStatus::kLocalized && r.position) {
      if (!truth[i].gnss) {
        throw Error(ErrorKind::kMissingGroundTruth, r.photo);
      }
      e.error_m = HaversineMeters(*r.position, *truth[i].gnss);
    }
    errors.push_back(std::move(e));
  }
  return errors;
}

EvalSummary Summarize(std::span<const PhotoError> errors, double threshold_m) {
  if (!(threshold_m > 0.0)) {
    throw Error(ErrorKind::kInvalidArgument, "threshold must be positive");
  }
  EvalSummary s;
  s.success_threshold_m = threshold_m;
  s.n_total = static_cast<int>(errors.size());
  s.errors.assign(errors.begin(), errors.end());
  // Summing in sorted order makes the means independent of input order.
  std::vector<double> success, localized;
  for (const PhotoError& e : errors) {
    if (!e.error_m) continue;
    localized.push_back(*e.error_m);
    if (*e.error_m < threshold_m) success.push_back(*e.error_m);
  }
  std::sort(success.begin(), success.end());
  std::sort(localized.begin(), localized.end());
  s.n_localized = static_cast<int>(localized.size());
  s.n_success = static_cast<int>(success.size());
  if (!success.empty()) s.mae_m = RunningMean(success);
  if (!localized.empty()) s.mae_all_m = RunningMean(localized);
  return s;
}

void EmitReport(std::span<const LocalizationResult> results,
                std::span<const PhotoMeta> truth, const EvalSummary& summary,
                const std::filesystem::path& out_dir) {
  if (results.size() != truth.size() ||
      summary.errors.size() != results.size()) {
    throw Error(ErrorKind::kInvalidArgument,
                "results, truth and summary cover different photo counts");
  }
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw Error(ErrorKind::kIoError, out_dir.string());

  const auto results_path = out_dir / "results.csv";
  auto csv_out = OpenOut(results_path);
  csv_out << kResultsHeader << '\n';
  for (std::size_t i = 0; i < results.size(); ++i) {
    const LocalizationResult& r = results[i];
    csv_out << csv::Escape(r.photo) << ',' << StatusName(r.status) << ',';
    if (r.best_tile_id) csv_out << *r.best_tile_id;
    csv_out << ',' << r.raw_match_count << ',' << r.inlier_count << ',';
    if (r.position) {
      csv_out << csv::FormatFixed(r.position->lat, 9) << ','
              << csv::FormatFixed(r.position->lon, 9);
    } else {
      csv_out << ',';
    }
    csv_out << ',';
    if (summary.errors[i].error_m) {
      csv_out << csv::FormatFixed(*summary.errors[i].error_m, 3);
    }
    csv_out << '\n';
  }
  Finish(csv_out, results_path);

  const auto summary_path = out_dir / "summary.txt";
  auto sum_out = OpenOut(summary_path);
  const auto opt = [](const std::optional<double>& v) {
    return v ? csv::FormatFixed(*v, 3) : std::string();
  };
  sum_out << "n_total=" << summary.n_total << '\n'
          << "n_localized=" << summary.n_localized << '\n'
          << "n_success=" << summary.n_success << '\n'
          << "success_threshold_m="
          << csv::FormatFixed(summary.success_threshold_m, 3) << '\n'
          << "success_rate="
          << (summary.n_total > 0
                  ? csv::FormatFixed(
                        static_cast<double>(summary.n_success) / summary.n_total,
                        4)
                  : std::string())
          << '\n'
          << "mae_m=" << opt(summary.mae_m) << '\n'
          << "mae_all_m=" << opt(summary.mae_all_m) << '\n';
  Finish(sum_out, summary_path);

  const auto error_path = out_dir / "error_plot.dat";
  auto err_out = OpenOut(error_path);
  err_out << "# photo_index error_m\n";
  const auto coord_path = out_dir / "coords_plot.dat";
  auto coord_out = OpenOut(coord_path);
  coord_out << "# lat lon gnss_lat gnss_lon\n";
  for (std::size_t i = 0; i < results.size(); ++i) {
    const auto& e = summary.errors[i];
    if (!e.error_m) continue;
    err_out << i << ' ' << csv::FormatFixed(*e.error_m, 3) << '\n';
    if (results[i].position && truth[i].gnss) {
      coord_out << csv::FormatFixed(results[i].position->lat, 9) << ' '
                << csv::FormatFixed(results[i].position->lon, 9) << ' '
                << csv::FormatFixed(truth[i].gnss->lat, 9) << ' '
                << csv::FormatFixed(truth[i].gnss->lon, 9) << '\n';
    }
  }
  Finish(err_out, error_path);
  Finish(coord_out, coord_path);
}

}  // namespace wildloc
