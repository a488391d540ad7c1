#pragma once

#include <cstdint>
#include <filesystem>
#include <ostream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "anchorpose/benchmark.hpp"
#include "anchorpose/losses.hpp"

namespace anchorpose {

/// Version of every report layout below (CSV columns, JSON envelope, SVG).
inline constexpr int kReportFormatVersion = 1;

std::string sha256_hex(std::string_view bytes);

/// IoError when the file cannot be read.
std::string sha256_file(const std::filesystem::path& path);

struct InputDigest {
  std::string path;
  std::string sha256;
};

/// Everything a report echoes besides its results. Keys keep insertion order
/// in CSV comments; JSON objects are emitted with sorted keys.
struct ReportContext {
  std::string command;
  std::uint64_t seed = 0;
  std::vector<std::pair<std::string, std::string>> config;
  std::vector<InputDigest> inputs;
};

// Frozen CSV layouts (format version 1). Translation columns are always
// present and left empty when the estimator produced no translation.
inline constexpr const char* kMetricsCsvHeader =
    "benchmark,estimator,n,yaw_mae_deg,pitch_mae_deg,roll_mae_deg,mae_deg,geodesic_mae_deg,"
    "tx_mae_mm,ty_mae_mm,tz_mae_mm,t_l2_mean_mm";
inline constexpr const char* kSweepCsvHeader =
    "axis,bin_lo_deg,bin_hi_deg,estimator,n,yaw_mae_deg,pitch_mae_deg,roll_mae_deg,mae_deg,geodesic_mae_deg,"
    "tx_mae_mm,ty_mae_mm,tz_mae_mm,t_l2_mean_mm";
inline constexpr const char* kLossCsvHeader =
    "stage,weight,translation,rotation,fov,weighted_translation,weighted_rotation,weighted_fov,contribution";

using NamedMetrics = std::vector<std::pair<std::string, MetricReport>>;

void write_metrics_csv(std::ostream& out, std::string_view benchmark, const NamedMetrics& metrics);
void write_sweep_csv(std::ostream& out, const SweepReport& report);
void write_loss_csv(std::ostream& out, const LossBreakdown<double>& loss);

nlohmann::json to_json(const MetricReport& report);
nlohmann::json to_json(const PairStats& stats);
nlohmann::json to_json(const SweepReport& report);
nlohmann::json to_json(const LossBreakdown<double>& loss);
nlohmann::json to_json(const NamedMetrics& metrics);

/// {format_version, command, seed, config, inputs, stats, results}.
nlohmann::json make_envelope(const ReportContext& context, nlohmann::json stats, nlohmann::json results);

/// Two-space indented dump with a trailing newline.
std::string dump_json(const nlohmann::json& doc);

struct SvgOptions {
  int width = 720;
  int height = 480;
  std::string title;
};

/**
 * Line chart of per-bin MAE for every estimator above a band of bars giving
 * the number of pairs per bin. Elements carry class and data-* attributes:
 * polyline.series[data-estimator], circle.point[data-bin][data-mae],
 * rect.count[data-bin][data-count]. Empty bins break a series' polyline.
 */
std::string render_sweep_svg(const SweepReport& report, const SvgOptions& options = {});

}  // namespace anchorpose
