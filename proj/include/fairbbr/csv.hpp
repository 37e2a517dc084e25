#pragma once

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <fmt/format.h>

#include "fairbbr/errors.hpp"
#include "fairbbr/metrics.hpp"

namespace fairbbr {

inline constexpr std::string_view kMetricsCsvHeader =
    "window_start,flow_id,send_rate,block_size,throughput,avg_latency";

// Shortest round-trip representation, '.' decimal separator regardless of
// locale.
inline std::string format_double(double v) { return fmt::format("{}", v); }

inline void write_metrics_csv(std::ostream& os, const std::vector<MetricsRow>& rows) {
  os << kMetricsCsvHeader << '\n';
  for (const auto& r : rows) {
    os << format_double(r.window_start) << ',' << r.flow_id << ','
       << format_double(r.send_rate) << ',' << format_double(r.block_size) << ','
       << format_double(r.throughput) << ','
       << (r.avg_latency.has_value() ? format_double(*r.avg_latency) : "") << '\n';
  }
}

inline void write_metrics_csv(const std::string& path,
                              const std::vector<MetricsRow>& rows) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open '" + path + "' for writing");
  write_metrics_csv(f, rows);
  if (!f) throw IoError("write failed on '" + path + "'");
}

struct CsvReadResult {
  std::vector<MetricsRow> rows;
  size_t skipped = 0;  // malformed rows dropped in lenient mode
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  size_t start = 0;
  while (true) {
    size_t pos = line.find(',', start);
    if (pos == std::string::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

inline double parse_double_field(const std::string& text, size_t line_no,
                                 size_t column) {
  double value = 0;
  const char* begin = text.data();
  const char* end = begin + text.size();
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc{} || ptr != end || !std::isfinite(value)) {
    throw ParseError(line_no, column,
                     fmt::format("line {}, column {}: expected a number, got '{}'",
                                 line_no, column, text));
  }
  return value;
}

}  // namespace detail

// Header-name matching: columns may come in any order, unknown extra
// columns are ignored (external captures carry extras). Lenient mode skips
// malformed data rows and counts them; strict mode throws ParseError.
inline CsvReadResult read_metrics_csv(std::istream& is, bool strict = false) {
  std::string line;
  if (!std::getline(is, line)) throw ParseError(1, 1, "empty file: missing header");
  if (!line.empty() && line.back() == '\r') line.pop_back();

  auto names = detail::split_csv_line(line);
  std::map<std::string, size_t> col;
  for (size_t i = 0; i < names.size(); ++i) col[names[i]] = i;
  for (const char* required : {"window_start", "flow_id", "send_rate", "block_size",
                               "throughput", "avg_latency"}) {
    if (!col.contains(required)) {
      throw ParseError(1, 1, fmt::format("missing required column '{}'", required));
    }
  }

  CsvReadResult result;
  size_t line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fields = detail::split_csv_line(line);
    try {
      if (fields.size() != names.size()) {
        throw ParseError(line_no, 1,
                         fmt::format("line {}: expected {} fields, got {}", line_no,
                                     names.size(), fields.size()));
      }
      auto field = [&](const char* name) -> const std::string& {
        return fields[col.at(name)];
      };
      auto column_of = [&](const char* name) { return col.at(name) + 1; };

      MetricsRow row;
      row.window_start = detail::parse_double_field(field("window_start"), line_no,
                                                    column_of("window_start"));
      row.flow_id = field("flow_id");
      row.send_rate =
          detail::parse_double_field(field("send_rate"), line_no, column_of("send_rate"));
      row.block_size = detail::parse_double_field(field("block_size"), line_no,
                                                  column_of("block_size"));
      row.throughput = detail::parse_double_field(field("throughput"), line_no,
                                                  column_of("throughput"));
      const std::string& lat = field("avg_latency");
      if (!lat.empty()) {
        row.avg_latency =
            detail::parse_double_field(lat, line_no, column_of("avg_latency"));
        if (*row.avg_latency < 0) {
          throw ParseError(line_no, column_of("avg_latency"),
                           fmt::format("line {}: negative latency '{}'", line_no, lat));
        }
      }
      result.rows.push_back(std::move(row));
    } catch (const ParseError&) {
      if (strict) throw;
      ++result.skipped;
    }
  }
  return result;
}

inline CsvReadResult read_metrics_csv(const std::string& path, bool strict = false) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open '" + path + "' for reading");
  return read_metrics_csv(f, strict);
}

// One-step ingestion: parse, then keep only labelable rows.
inline Dataset import_csv(const std::string& path, bool strict = false,
                          double threshold_s = 1.0) {
  auto read = read_metrics_csv(path, strict);
  return dataset_from_rows(read.rows, threshold_s, Provenance::Imported);
}

}  // namespace fairbbr
