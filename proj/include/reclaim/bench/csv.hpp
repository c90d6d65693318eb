// CSV output for trial records (RFC 4180 quoting) and a matching reader.
#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "reclaim/bench/trial.hpp"

namespace reclaim::bench {

inline const std::vector<std::string>& csv_columns() {
  static const std::vector<std::string> cols = {
      "structure",   "scheme",          "threads",
      "duration",    "key_range",       "workload",
      "trials",      "prefill",         "stall",
      "alloc_mode",  "seed",            "ops_total",
      "throughput_ops_per_s", "peak_live_bytes", "peak_retired_nodes",
      "signals_sent", "restarts",       "fences_on_read_path",
      "slow_path_triggers", "violations"};
  return cols;
}

inline std::string csv_quote(const std::string& field) {
  if (field.find_first_of(",\"\r\n") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

inline std::string format_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::vector<std::string> csv_fields(const TrialRecord& r) {
  const TrialConfig& c = r.config;
  return {std::string(to_string(c.structure)),
          std::string(to_string(c.scheme)),
          std::to_string(c.threads),
          format_number(c.duration),
          std::to_string(c.key_range),
          c.workload.str(),
          std::to_string(c.trials),
          format_number(c.prefill),
          std::string(to_string(c.stall)),
          std::string(to_string(c.alloc_mode)),
          std::to_string(c.seed),
          std::to_string(r.ops_total),
          format_number(r.throughput_ops_per_s),
          std::to_string(r.peak_live_bytes),
          std::to_string(r.peak_retired_nodes),
          std::to_string(r.signals_sent),
          std::to_string(r.restarts),
          std::to_string(r.fences_on_read_path),
          std::to_string(r.slow_path_triggers),
          std::to_string(r.violations)};
}

inline void write_csv_row(std::ostream& os, const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) os << ',';
    os << csv_quote(fields[i]);
  }
  os << "\r\n";
}

/// Writes a header plus one row per record. In append mode the header is
/// written only when the file is new or empty.
inline void emit_csv(const std::vector<TrialRecord>& records, const std::string& path,
                     bool append = false) {
  bool need_header = true;
  if (append) {
    std::ifstream probe(path, std::ios::binary | std::ios::ate);
    need_header = !probe.good() || probe.tellg() == 0;
  }
  std::ofstream out(path, append ? std::ios::binary | std::ios::app
                                 : std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  if (need_header) write_csv_row(out, csv_columns());
  for (const auto& r : records) write_csv_row(out, csv_fields(r));
  out.flush();
  if (!out) throw std::runtime_error("write failed: " + path);
}

/// Parses RFC 4180 text into rows of fields.
inline std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false;
  bool field_started = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
      continue;
    }
    if (c == '"' && field.empty()) {
      quoted = true;
      field_started = true;
    } else if (c == ',') {
      row.push_back(std::move(field));
      field.clear();
      field_started = true;
    } else if (c == '\r' || c == '\n') {
      if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
      row.push_back(std::move(field));
      field.clear();
      rows.push_back(std::move(row));
      row.clear();
      field_started = false;
    } else {
      field += c;
      field_started = true;
    }
  }
  if (field_started || !field.empty()) {
    row.push_back(std::move(field));
    rows.push_back(std::move(row));
  }
  if (quoted) throw std::runtime_error("unterminated quoted field");
  return rows;
}

inline std::vector<std::vector<std::string>> read_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_csv(ss.str());
}

}  // namespace reclaim::bench
