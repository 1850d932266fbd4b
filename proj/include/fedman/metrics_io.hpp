#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "fedman/runtime.hpp"

namespace fedman {

inline constexpr std::string_view kMetricsCsvHeader =
    "round,grad_norm,objective,obj_gap,uplink_matrices,elapsed_ms";

struct CsvOptions {
  /// When false, elapsed_ms is written as 0 so that runs can be compared
  /// byte for byte.
  bool include_timing = true;
};

/// Reals use 17 significant digits; a missing obj_gap is an empty field.
std::string format_metrics_csv(const std::vector<RoundMetrics>& series, const CsvOptions& options = {});
void write_metrics_csv(const std::vector<RoundMetrics>& series, const std::filesystem::path& path,
                       const CsvOptions& options = {});
std::vector<RoundMetrics> parse_metrics_csv(std::string_view text);

struct NamedSeries {
  std::string name;
  std::vector<RoundMetrics> metrics;
};

/// Same columns prefixed by an `algo` column.
std::string format_merged_csv(const std::vector<NamedSeries>& runs, const CsvOptions& options = {});

enum class MetricField { Round, GradNorm, Objective, ObjGap, UplinkMatrices, ElapsedMs };

MetricField parse_metric_field(std::string_view name);
std::string_view metric_field_name(MetricField field) noexcept;

struct PlotOptions {
  MetricField x = MetricField::Round;
  MetricField y = MetricField::GradNorm;
  bool log_y = true;
  std::string title;
  double width = 720;
  double height = 440;
};

/// Standalone SVG line chart with one polyline per series and a legend.
/// Points whose y value is missing (or non-positive on a log axis) are
/// skipped. Throws InvalidArgument when there is nothing to plot.
std::string render_svg_plot(const std::vector<NamedSeries>& runs, const PlotOptions& options);
void emit_svg_plot(const std::vector<NamedSeries>& runs, const PlotOptions& options,
                   const std::filesystem::path& path);

void write_text_file(const std::filesystem::path& path, std::string_view text);

}  // namespace fedman
