#pragma once

// Columnar sweep results with CSV and JSON-lines emitters. Every table
// carries a metadata object (resolved config, seeds, tolerances, version,
// wall clock); numeric cells are written in shortest round-trip form so a
// rerun with the same config reproduces the data section byte for byte.

#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <ctime>
#include <ostream>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "ztsbm/version.hpp"

namespace ztsbm {

using Cell = std::variant<double, long long, std::string>;

struct SweepResult {
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;
  nlohmann::ordered_json meta;

  void add_row(std::vector<Cell> row) {
    if (row.size() != columns.size()) {
      throw std::invalid_argument("sweep row width does not match header");
    }
    rows.push_back(std::move(row));
  }

  // exit-code contract: a sweep failed if any row's "status" is not "ok"
  bool all_ok() const {
    std::size_t status_col = columns.size();
    for (std::size_t i = 0; i < columns.size(); ++i) {
      if (columns[i] == "status") status_col = i;
    }
    if (status_col == columns.size()) return true;
    for (const auto& row : rows) {
      const auto* s = std::get_if<std::string>(&row[status_col]);
      if (s == nullptr || *s != "ok") return false;
    }
    return true;
  }
};

namespace detail {

inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline std::string csv_quote(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  out += '"';
  return out;
}

inline std::string cell_to_csv(const Cell& c) {
  if (const auto* d = std::get_if<double>(&c)) return format_double(*d);
  if (const auto* i = std::get_if<long long>(&c)) return std::to_string(*i);
  return csv_quote(std::get<std::string>(c));
}

inline nlohmann::ordered_json cell_to_json(const Cell& c) {
  if (const auto* d = std::get_if<double>(&c)) {
    if (std::isnan(*d)) return nullptr;
    return *d;
  }
  if (const auto* i = std::get_if<long long>(&c)) return *i;
  return std::get<std::string>(c);
}

}  // namespace detail

inline nlohmann::ordered_json make_meta(const std::string& command,
                                        const nlohmann::ordered_json& config,
                                        const nlohmann::ordered_json& tolerances) {
  nlohmann::ordered_json meta;
  meta["command"] = command;
  meta["artifact_version"] = kVersion;
  const auto now = std::chrono::system_clock::now();
  const std::time_t tt = std::chrono::system_clock::to_time_t(now);
  char stamp[32];
  std::tm tm_utc{};
  gmtime_r(&tt, &tm_utc);
  std::strftime(stamp, sizeof(stamp), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
  meta["wall_clock_utc"] = stamp;
  meta["config"] = config;
  meta["tolerances"] = tolerances;
  return meta;
}

// '#'-prefixed metadata line, one header row, RFC-4180 data rows.
inline void write_csv(std::ostream& os, const SweepResult& r) {
  os << "# meta " << r.meta.dump() << '\n';
  for (std::size_t i = 0; i < r.columns.size(); ++i) {
    os << (i ? "," : "") << detail::csv_quote(r.columns[i]);
  }
  os << '\n';
  for (const auto& row : r.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      os << (i ? "," : "") << detail::cell_to_csv(row[i]);
    }
    os << '\n';
  }
}

// First line {"meta": ...}, then one object per row.
inline void write_jsonl(std::ostream& os, const SweepResult& r) {
  nlohmann::ordered_json head;
  head["meta"] = r.meta;
  os << head.dump() << '\n';
  for (const auto& row : r.rows) {
    nlohmann::ordered_json obj;
    for (std::size_t i = 0; i < row.size(); ++i) {
      obj[r.columns[i]] = detail::cell_to_json(row[i]);
    }
    os << obj.dump() << '\n';
  }
}

}  // namespace ztsbm
