#include "fedman/metrics_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <sstream>

#include "fedman/errors.hpp"

namespace fedman {

namespace {

std::string real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string short_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

void append_row(std::string& out, const RoundMetrics& m, const CsvOptions& options) {
  out += std::to_string(m.round);
  out += ',';
  out += real(m.grad_norm);
  out += ',';
  out += real(m.objective);
  out += ',';
  if (m.obj_gap) out += real(*m.obj_gap);
  out += ',';
  out += std::to_string(m.uplink_matrices);
  out += ',';
  out += real(options.include_timing ? m.elapsed_ms : 0.0);
  out += '\n';
}

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> parts;
  std::size_t begin = 0;
  while (true) {
    const auto pos = line.find(sep, begin);
    parts.push_back(line.substr(begin, pos == std::string_view::npos ? std::string_view::npos : pos - begin));
    if (pos == std::string_view::npos) break;
    begin = pos + 1;
  }
  return parts;
}

double parse_real(std::string_view field, std::size_t line_no) {
  const std::string s(field);
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || *end != '\0') {
    throw FormatError("metrics CSV line " + std::to_string(line_no) + ": bad number '" + s + "'");
  }
  return v;
}

long parse_int(std::string_view field, std::size_t line_no) {
  const std::string s(field);
  char* end = nullptr;
  const long v = std::strtol(s.c_str(), &end, 10);
  if (s.empty() || *end != '\0') {
    throw FormatError("metrics CSV line " + std::to_string(line_no) + ": bad integer '" + s + "'");
  }
  return v;
}

std::optional<double> field_value(const RoundMetrics& m, MetricField f) {
  switch (f) {
    case MetricField::Round: return static_cast<double>(m.round);
    case MetricField::GradNorm: return m.grad_norm;
    case MetricField::Objective: return m.objective;
    case MetricField::ObjGap: return m.obj_gap;
    case MetricField::UplinkMatrices: return static_cast<double>(m.uplink_matrices);
    case MetricField::ElapsedMs: return m.elapsed_ms;
  }
  return std::nullopt;
}

std::string xml_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2"};

}  // namespace

std::string format_metrics_csv(const std::vector<RoundMetrics>& series, const CsvOptions& options) {
  std::string out(kMetricsCsvHeader);
  out += '\n';
  for (const auto& m : series) append_row(out, m, options);
  return out;
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw Error("write failed: " + path.string());
}

void write_metrics_csv(const std::vector<RoundMetrics>& series, const std::filesystem::path& path,
                       const CsvOptions& options) {
  write_text_file(path, format_metrics_csv(series, options));
}

std::vector<RoundMetrics> parse_metrics_csv(std::string_view text) {
  std::vector<RoundMetrics> out;
  std::size_t line_no = 0;
  bool header_seen = false;
  for (std::string_view line : split(text, '\n')) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    if (!header_seen) {
      if (line != kMetricsCsvHeader) throw FormatError("metrics CSV: unexpected header '" + std::string(line) + "'");
      header_seen = true;
      continue;
    }
    const auto f = split(line, ',');
    if (f.size() != 6) throw FormatError("metrics CSV line " + std::to_string(line_no) + ": expected 6 fields");
    RoundMetrics m;
    m.round = parse_int(f[0], line_no);
    m.grad_norm = parse_real(f[1], line_no);
    m.objective = parse_real(f[2], line_no);
    if (!f[3].empty()) m.obj_gap = parse_real(f[3], line_no);
    m.uplink_matrices = parse_int(f[4], line_no);
    m.elapsed_ms = parse_real(f[5], line_no);
    out.push_back(m);
  }
  if (!header_seen) throw FormatError("metrics CSV: missing header");
  return out;
}

std::string format_merged_csv(const std::vector<NamedSeries>& runs, const CsvOptions& options) {
  std::string out = "algo,";
  out += kMetricsCsvHeader;
  out += '\n';
  for (const auto& run : runs) {
    for (const auto& m : run.metrics) {
      out += run.name;
      out += ',';
      append_row(out, m, options);
    }
  }
  return out;
}

MetricField parse_metric_field(std::string_view name) {
  for (MetricField f : {MetricField::Round, MetricField::GradNorm, MetricField::Objective, MetricField::ObjGap,
                        MetricField::UplinkMatrices, MetricField::ElapsedMs}) {
    if (metric_field_name(f) == name) return f;
  }
  throw ConfigError("unknown metric field '" + std::string(name) + "'");
}

std::string_view metric_field_name(MetricField field) noexcept {
  switch (field) {
    case MetricField::Round: return "round";
    case MetricField::GradNorm: return "grad_norm";
    case MetricField::Objective: return "objective";
    case MetricField::ObjGap: return "obj_gap";
    case MetricField::UplinkMatrices: return "uplink_matrices";
    case MetricField::ElapsedMs: return "elapsed_ms";
  }
  return "unknown";
}

std::string render_svg_plot(const std::vector<NamedSeries>& runs, const PlotOptions& options) {
  struct Pt {
    double x, y;
  };
  std::vector<std::vector<Pt>> points(runs.size());
  double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
  double ymin = xmin, ymax = -xmin;
  std::size_t total = 0;
  for (std::size_t s = 0; s < runs.size(); ++s) {
    for (const auto& m : runs[s].metrics) {
      const auto xv = field_value(m, options.x);
      auto yv = field_value(m, options.y);
      if (!xv || !yv || !std::isfinite(*xv) || !std::isfinite(*yv)) continue;
      if (options.log_y) {
        if (*yv <= 0.0) continue;
        yv = std::log10(*yv);
      }
      points[s].push_back({*xv, *yv});
      xmin = std::min(xmin, *xv);
      xmax = std::max(xmax, *xv);
      ymin = std::min(ymin, *yv);
      ymax = std::max(ymax, *yv);
      ++total;
    }
  }
  if (total == 0) throw InvalidArgument("emit_svg_plot: no plottable points");
  if (xmax == xmin) {
    xmin -= 0.5;
    xmax += 0.5;
  }
  if (ymax == ymin) {
    ymin -= 0.5;
    ymax += 0.5;
  }

  const double left = 80, right = 170, top = 40, bottom = 50;
  const double pw = options.width - left - right;
  const double ph = options.height - top - bottom;
  auto px = [&](double x) { return left + (x - xmin) / (xmax - xmin) * pw; };
  auto py = [&](double y) { return top + (1.0 - (y - ymin) / (ymax - ymin)) * ph; };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << options.width << "\" height=\"" << options.height
      << "\" viewBox=\"0 0 " << options.width << ' ' << options.height << "\">\n";
  svg << "<rect x=\"0\" y=\"0\" width=\"" << options.width << "\" height=\"" << options.height
      << "\" fill=\"white\"/>\n";
  if (!options.title.empty()) {
    svg << "<text x=\"" << left + pw / 2 << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" "
        << "font-size=\"15\">" << xml_escape(options.title) << "</text>\n";
  }
  svg << "<rect class=\"frame\" x=\"" << left << "\" y=\"" << top << "\" width=\"" << pw << "\" height=\"" << ph
      << "\" fill=\"none\" stroke=\"black\"/>\n";

  // Y gridlines: decades on a log axis, five even ticks otherwise.
  if (options.log_y) {
    for (double e = std::ceil(ymin); e <= std::floor(ymax); e += 1.0) {
      svg << "<line class=\"grid\" x1=\"" << left << "\" x2=\"" << left + pw << "\" y1=\"" << py(e) << "\" y2=\""
          << py(e) << "\" stroke=\"#ddd\"/>\n";
      svg << "<text x=\"" << left - 6 << "\" y=\"" << py(e) + 4
          << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">1e" << static_cast<long>(e)
          << "</text>\n";
    }
  } else {
    for (int i = 0; i <= 4; ++i) {
      const double v = ymin + (ymax - ymin) * i / 4.0;
      svg << "<line class=\"grid\" x1=\"" << left << "\" x2=\"" << left + pw << "\" y1=\"" << py(v) << "\" y2=\""
          << py(v) << "\" stroke=\"#ddd\"/>\n";
      svg << "<text x=\"" << left - 6 << "\" y=\"" << py(v) + 4
          << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" << short_real(v) << "</text>\n";
    }
  }
  for (int i = 0; i <= 4; ++i) {
    const double v = xmin + (xmax - xmin) * i / 4.0;
    svg << "<text x=\"" << px(v) << "\" y=\"" << top + ph + 18
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" << short_real(v) << "</text>\n";
  }
  svg << "<text x=\"" << left + pw / 2 << "\" y=\"" << options.height - 10
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">" << metric_field_name(options.x)
      << "</text>\n";
  svg << "<text x=\"16\" y=\"" << top + ph / 2 << "\" transform=\"rotate(-90 16 " << top + ph / 2
      << ")\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">" << metric_field_name(options.y)
      << (options.log_y ? " (log)" : "") << "</text>\n";

  svg.precision(10);
  for (std::size_t s = 0; s < runs.size(); ++s) {
    const char* color = kPalette[s % std::size(kPalette)];
    svg << "<polyline class=\"series\" data-name=\"" << xml_escape(runs[s].name) << "\" fill=\"none\" stroke=\""
        << color << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < points[s].size(); ++i) {
      if (i) svg << ' ';
      svg << px(points[s][i].x) << ',' << py(points[s][i].y);
    }
    svg << "\"/>\n";
    const double ly = top + 16 + 20.0 * static_cast<double>(s);
    svg << "<g class=\"legend\"><line x1=\"" << left + pw + 12 << "\" x2=\"" << left + pw + 36 << "\" y1=\"" << ly
        << "\" y2=\"" << ly << "\" stroke=\"" << color << "\" stroke-width=\"2\"/><text x=\"" << left + pw + 42
        << "\" y=\"" << ly + 4 << "\" font-family=\"sans-serif\" font-size=\"12\">" << xml_escape(runs[s].name)
        << "</text></g>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

void emit_svg_plot(const std::vector<NamedSeries>& runs, const PlotOptions& options,
                   const std::filesystem::path& path) {
  write_text_file(path, render_svg_plot(runs, options));
}

}  // namespace fedman
