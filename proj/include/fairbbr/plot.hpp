#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "fairbbr/errors.hpp"
#include "fairbbr/experiment.hpp"

namespace fairbbr::exp {

// Minimal SVG line chart for a PlotTable: one polyline per data column,
// left/bottom axes with a handful of ticks, and a small legend. Plots are
// derived views; they never feed back into any CSV output.
inline std::string render_svg_chart(const PlotTable& table, const std::string& title) {
  const double width = 640, height = 420;
  const double ml = 70, mr = 20, mt = 40, mb = 50;
  const double plot_w = width - ml - mr;
  const double plot_h = height - mt - mb;
  static const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                  "#ff7f0e", "#8c564b"};

  double xmin = 0, xmax = 1, ymin = 0, ymax = 1;
  bool any = false;
  for (const auto& row : table.rows) {
    if (!row[0].has_value()) continue;
    for (size_t c = 1; c < row.size(); ++c) {
      if (!row[c].has_value()) continue;
      if (!any) {
        xmin = xmax = *row[0];
        ymin = ymax = *row[c];
        any = true;
      }
      xmin = std::min(xmin, *row[0]);
      xmax = std::max(xmax, *row[0]);
      ymin = std::min(ymin, *row[c]);
      ymax = std::max(ymax, *row[c]);
    }
  }
  if (!any) {
    xmin = ymin = 0;
    xmax = ymax = 1;
  }
  if (xmax == xmin) xmax = xmin + 1;
  if (ymax == ymin) ymax = ymin + 1;
  ymin = std::min(ymin, 0.0);

  auto sx = [&](double x) { return ml + (x - xmin) / (xmax - xmin) * plot_w; };
  auto sy = [&](double y) { return mt + plot_h - (y - ymin) / (ymax - ymin) * plot_h; };

  std::string svg = fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" "
      "viewBox=\"0 0 {} {}\">\n",
      width, height, width, height);
  svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg += fmt::format(
      "<text x=\"{}\" y=\"24\" font-family=\"sans-serif\" font-size=\"16\" "
      "text-anchor=\"middle\">{}</text>\n",
      width / 2, title);

  // axes
  svg += fmt::format(
      "<line x1=\"{0}\" y1=\"{1}\" x2=\"{0}\" y2=\"{2}\" stroke=\"black\"/>\n", ml,
      mt, mt + plot_h);
  svg += fmt::format(
      "<line x1=\"{0}\" y1=\"{1}\" x2=\"{2}\" y2=\"{1}\" stroke=\"black\"/>\n", ml,
      mt + plot_h, ml + plot_w);
  for (int i = 0; i <= 5; ++i) {
    double fx = xmin + (xmax - xmin) * i / 5.0;
    double fy = ymin + (ymax - ymin) * i / 5.0;
    svg += fmt::format(
        "<text x=\"{:.1f}\" y=\"{:.1f}\" font-family=\"sans-serif\" font-size=\"10\" "
        "text-anchor=\"middle\">{:.4g}</text>\n",
        sx(fx), mt + plot_h + 16, fx);
    svg += fmt::format(
        "<text x=\"{:.1f}\" y=\"{:.1f}\" font-family=\"sans-serif\" font-size=\"10\" "
        "text-anchor=\"end\">{:.4g}</text>\n",
        ml - 6, sy(fy) + 3, fy);
    svg += fmt::format(
        "<line x1=\"{0:.1f}\" y1=\"{1:.1f}\" x2=\"{2:.1f}\" y2=\"{1:.1f}\" "
        "stroke=\"#dddddd\"/>\n",
        ml, sy(fy), ml + plot_w);
  }
  svg += fmt::format(
      "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\" "
      "text-anchor=\"middle\">{}</text>\n",
      ml + plot_w / 2, height - 12, table.x_label);

  for (size_t c = 1; c < table.columns.size(); ++c) {
    const char* color = kColors[(c - 1) % 6];
    std::string points;
    for (const auto& row : table.rows) {
      if (!row[0].has_value() || c >= row.size() || !row[c].has_value()) continue;
      points += fmt::format("{:.2f},{:.2f} ", sx(*row[0]), sy(*row[c]));
    }
    svg += fmt::format(
        "<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"1.5\" points=\"{}\"/>\n",
        color, points);
    svg += fmt::format(
        "<rect x=\"{}\" y=\"{}\" width=\"10\" height=\"10\" fill=\"{}\"/>\n",
        ml + plot_w - 130, mt + 8 + 16 * (c - 1), color);
    svg += fmt::format(
        "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"11\">{}</text>\n",
        ml + plot_w - 116, mt + 17 + 16 * (c - 1), table.columns[c]);
  }
  svg += "</svg>\n";
  return svg;
}

inline void write_svg_chart(const std::string& path, const PlotTable& table,
                            const std::string& title) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open '" + path + "' for writing");
  f << render_svg_chart(table, title);
  if (!f) throw IoError("write failed on '" + path + "'");
}

// Reads a plot-data CSV (x column first) back into a table for `plot`.
inline PlotTable read_plot_table_csv(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open '" + path + "' for reading");
  PlotTable t;
  std::string line;
  if (!std::getline(f, line)) throw ParseError(1, 1, "empty plot-data file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  t.columns = detail::split_csv_line(line);
  if (t.columns.size() < 2) throw ParseError(1, 1, "plot-data needs an x column and data");
  t.x_label = t.columns[0];
  size_t line_no = 1;
  while (std::getline(f, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fields = detail::split_csv_line(line);
    if (fields.size() != t.columns.size()) {
      throw ParseError(line_no, 1,
                       fmt::format("line {}: expected {} fields, got {}", line_no,
                                   t.columns.size(), fields.size()));
    }
    std::vector<std::optional<double>> row;
    for (size_t c = 0; c < fields.size(); ++c) {
      if (fields[c].empty()) {
        row.push_back(std::nullopt);
      } else {
        row.push_back(detail::parse_double_field(fields[c], line_no, c + 1));
      }
    }
    t.rows.push_back(std::move(row));
  }
  return t;
}

}  // namespace fairbbr::exp
