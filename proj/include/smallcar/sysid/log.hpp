#pragma once

// Driving logs as recorded on the robot, and their CSV dialect:
//
//   t,tau,s,v_enc,omega_imu[,x_t,y_t,eta_t]
//
// Header required, '.' decimal separator, SI units, one row per sample.
// Columns are located by name; unknown columns are ignored, so trajectory
// exports (which append state columns) load as logs too.

#include <array>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "smallcar/sysid/errors.hpp"

namespace smallcar::sysid {

/// Motion-capture pose of the CoM in the global frame.
struct MocapTrack {
  std::vector<double> x;
  std::vector<double> y;
  std::vector<double> eta;
};

struct RawLog {
  std::vector<double> t;
  std::vector<double> tau;
  std::vector<double> s;
  std::vector<double> v_enc;
  std::vector<double> omega_imu;
  std::optional<MocapTrack> mocap;

  [[nodiscard]] std::size_t size() const { return t.size(); }
  [[nodiscard]] bool has_mocap() const { return mocap.has_value(); }
};

/// Checks the RawLog invariants; `source` names the log in error messages.
inline void validate(const RawLog& log, const std::string& source = "log") {
  const std::size_t n = log.t.size();
  auto same = [n](const std::vector<double>& v) { return v.size() == n; };
  if (!same(log.tau) || !same(log.s) || !same(log.v_enc) || !same(log.omega_imu)) {
    throw ParseError(source, 0, "column lengths differ");
  }
  if (log.mocap && (!same(log.mocap->x) || !same(log.mocap->y) || !same(log.mocap->eta))) {
    throw ParseError(source, 0, "mocap column lengths differ");
  }
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t row = i + 1;
    bool finite = std::isfinite(log.t[i]) && std::isfinite(log.tau[i]) && std::isfinite(log.s[i]) &&
                  std::isfinite(log.v_enc[i]) && std::isfinite(log.omega_imu[i]);
    if (log.mocap) {
      finite = finite && std::isfinite(log.mocap->x[i]) && std::isfinite(log.mocap->y[i]) &&
               std::isfinite(log.mocap->eta[i]);
    }
    if (!finite) throw ParseError(source, row, "non-finite value");
    if (i > 0 && !(log.t[i] > log.t[i - 1])) {
      throw ParseError(source, row, "time stamps must be strictly increasing");
    }
    if (std::abs(log.tau[i]) > 1.0) throw ParseError(source, row, "throttle outside [-1, 1]");
    if (std::abs(log.s[i]) > 1.0) throw ParseError(source, row, "steering input outside [-1, 1]");
  }
}

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      out.push_back(trim(line.substr(start)));
      return out;
    }
    out.push_back(trim(line.substr(start, comma - start)));
    start = comma + 1;
  }
}

inline std::optional<double> parse_double(std::string_view field) {
  if (!field.empty() && field.front() == '+') field.remove_prefix(1);
  double value = 0.0;
  const auto* end = field.data() + field.size();
  const auto [ptr, ec] = std::from_chars(field.data(), end, value);
  if (ec != std::errc{} || ptr != end || field.empty()) return std::nullopt;
  return value;
}

}  // namespace detail

/// Numeric CSV with a header row, stored column-wise.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> columns;

  [[nodiscard]] std::size_t rows() const { return columns.empty() ? 0 : columns.front().size(); }
  [[nodiscard]] const std::vector<double>* column(std::string_view name) const {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (header[i] == name) return &columns[i];
    }
    return nullptr;
  }
  [[nodiscard]] bool has(std::string_view name) const { return column(name) != nullptr; }
};

/// Reads a header plus numeric rows. Blank lines are skipped; row numbers in
/// errors count data rows from 1.
inline CsvTable load_table(std::istream& in, const std::string& source = "log") {
  std::string line;
  if (!std::getline(in, line)) throw ParseError(source, 0, "empty input, header required");
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  CsvTable table;
  for (auto name : detail::split_fields(line)) {
    if (name.empty()) throw ParseError(source, 0, "empty column name in header");
    for (const auto& seen : table.header) {
      if (seen == name) throw ParseError(source, 0, "duplicate column '" + std::string(name) + "'");
    }
    table.header.emplace_back(name);
  }
  table.columns.resize(table.header.size());

  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (detail::trim(line).empty()) continue;
    ++row;
    const auto fields = detail::split_fields(line);
    if (fields.size() != table.header.size()) {
      throw ParseError(source, row,
                       "expected " + std::to_string(table.header.size()) + " fields, found " +
                           std::to_string(fields.size()));
    }
    for (std::size_t c = 0; c < fields.size(); ++c) {
      const auto v = detail::parse_double(fields[c]);
      if (!v) {
        throw ParseError(source, row,
                         "cannot parse '" + std::string(fields[c]) + "' in column '" + table.header[c] + "'");
      }
      table.columns[c].push_back(*v);
    }
  }
  return table;
}

/// Extracts and validates the log columns of a table.
inline RawLog log_from_table(const CsvTable& table, const std::string& source = "log") {
  static constexpr std::array<std::string_view, 5> kRequired = {"t", "tau", "s", "v_enc", "omega_imu"};
  static constexpr std::array<std::string_view, 3> kMocap = {"x_t", "y_t", "eta_t"};

  RawLog log;
  std::array<std::vector<double>*, 5> dst = {&log.t, &log.tau, &log.s, &log.v_enc, &log.omega_imu};
  for (std::size_t k = 0; k < kRequired.size(); ++k) {
    const auto* col = table.column(kRequired[k]);
    if (!col) throw ParseError(source, 0, "missing required column '" + std::string(kRequired[k]) + "'");
    *dst[k] = *col;
  }
  std::size_t mocap_found = 0;
  for (auto name : kMocap) mocap_found += table.has(name) ? 1 : 0;
  if (mocap_found != 0 && mocap_found != kMocap.size()) {
    throw ParseError(source, 0, "mocap columns must appear together (x_t, y_t, eta_t)");
  }
  if (mocap_found != 0) log.mocap = MocapTrack{*table.column("x_t"), *table.column("y_t"), *table.column("eta_t")};
  validate(log, source);
  return log;
}

/// Parses and validates a log. Errors carry the source name and data row.
inline RawLog load_log(std::istream& in, const std::string& source = "log") {
  return log_from_table(load_table(in, source), source);
}

inline RawLog load_log_string(const std::string& text, const std::string& source = "log") {
  std::istringstream in(text);
  return load_log(in, source);
}

/// Shortest decimal text that reads back to the same double.
inline std::string format_double(double v) {
  std::array<char, 32> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), ptr);
}

inline void write_log(std::ostream& out, const RawLog& log) {
  out << "t,tau,s,v_enc,omega_imu";
  if (log.mocap) out << ",x_t,y_t,eta_t";
  out << '\n';
  for (std::size_t i = 0; i < log.size(); ++i) {
    out << format_double(log.t[i]) << ',' << format_double(log.tau[i]) << ','
        << format_double(log.s[i]) << ',' << format_double(log.v_enc[i]) << ','
        << format_double(log.omega_imu[i]);
    if (log.mocap) {
      out << ',' << format_double(log.mocap->x[i]) << ',' << format_double(log.mocap->y[i]) << ','
          << format_double(log.mocap->eta[i]);
    }
    out << '\n';
  }
}

/// Uniform sampling interval of the log; throws if spacing varies by more than `rel_tol`.
inline double uniform_dt(const RawLog& log, double rel_tol = 1e-6) {
  if (log.size() < 2) throw InsufficientDataError("uniform_dt: need at least 2 samples");
  const double dt = (log.t.back() - log.t.front()) / static_cast<double>(log.size() - 1);
  for (std::size_t i = 1; i < log.size(); ++i) {
    if (std::abs(log.t[i] - log.t[i - 1] - dt) > rel_tol * dt + 1e-12) {
      throw ConfigError("log is not uniformly sampled");
    }
  }
  return dt;
}

}  // namespace smallcar::sysid
