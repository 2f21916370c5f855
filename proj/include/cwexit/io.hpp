/*
 * io.hpp - sample CSV, run manifest and report serialization.
 *
 * Sample CSV (one header row, then one row per trajectory in index order):
 *
 *   trajectory_id,seed,sign,exit_time,shifted_time,n_jumps,truncated
 *
 * Reals use the shortest decimal string that round-trips to the same double, so
 * files are byte-stable across platforms. sign is -1 or 1, truncated is 0 or 1.
 */
#pragma once

#include <algorithm>
#include <array>
#include <charconv>
#include <chrono>
#include <cstdint>
#include <ctime>
#include <fstream>
#include <iterator>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include <json.hpp>

#include "cwexit/errors.hpp"
#include "cwexit/sim.hpp"
#include "cwexit/stats.hpp"
#include "cwexit/theory.hpp"

namespace cwexit::io {

inline constexpr std::string_view kVersion = "0.1.0";
inline constexpr std::string_view kCsvHeader =
    "trajectory_id,seed,sign,exit_time,shifted_time,n_jumps,truncated";

/// Shortest round-trip decimal representation.
inline std::string format_double(double value) {
  char buf[64];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, value);
  if (ec != std::errc{}) throw format_error("cannot format floating-point value");
  return {buf, end};
}

struct SampleRow {
  std::uint64_t trajectory_id = 0;
  std::uint64_t seed = 0;
  int sign = 1;
  double exit_time = 0.0;
  double shifted_time = 0.0;
  std::uint64_t n_jumps = 0;
  bool truncated = false;
};

inline void write_samples_csv(std::ostream& out, const EnsembleResult& ensemble, double centering) {
  out << kCsvHeader << '\n';
  std::uint64_t id = 0;
  for (const ExitSample& s : ensemble.samples) {
    out << id++ << ',' << s.seed << ',' << s.sign << ',' << format_double(s.exit_time) << ','
        << format_double(s.exit_time - centering) << ',' << s.n_jumps << ',' << (s.truncated ? 1 : 0)
        << '\n';
  }
}

namespace detail {

template <class T>
T parse_field(std::string_view text, std::size_t line, std::string_view column) {
  T value{};
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size()) {
    throw format_error("line " + std::to_string(line) + ": cannot parse column '" +
                       std::string(column) + "' from '" + std::string(text) + "'");
  }
  return value;
}

inline std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  for (;;) {
    const auto comma = line.find(',', start);
    fields.push_back(line.substr(start, comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return fields;
}

}  // namespace detail

/// Parses a sample CSV. Columns may appear in any order but all seven must be
/// present; throws format_error otherwise.
inline std::vector<SampleRow> read_samples_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw format_error("sample file is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = detail::split_commas(line);
  constexpr std::array<std::string_view, 7> names{"trajectory_id", "seed",    "sign",     "exit_time",
                                                  "shifted_time",  "n_jumps", "truncated"};
  std::array<std::size_t, 7> column{};
  for (std::size_t k = 0; k < names.size(); ++k) {
    const auto it = std::find(header.begin(), header.end(), names[k]);
    if (it == header.end()) throw format_error("missing column '" + std::string(names[k]) + "'");
    column[k] = static_cast<std::size_t>(it - header.begin());
  }

  std::vector<SampleRow> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = detail::split_commas(line);
    if (fields.size() != header.size()) {
      throw format_error("line " + std::to_string(line_no) + ": expected " +
                         std::to_string(header.size()) + " fields");
    }
    SampleRow row;
    row.trajectory_id = detail::parse_field<std::uint64_t>(fields[column[0]], line_no, names[0]);
    row.seed = detail::parse_field<std::uint64_t>(fields[column[1]], line_no, names[1]);
    row.sign = detail::parse_field<int>(fields[column[2]], line_no, names[2]);
    row.exit_time = detail::parse_field<double>(fields[column[3]], line_no, names[3]);
    row.shifted_time = detail::parse_field<double>(fields[column[4]], line_no, names[4]);
    row.n_jumps = detail::parse_field<std::uint64_t>(fields[column[5]], line_no, names[5]);
    const int truncated = detail::parse_field<int>(fields[column[6]], line_no, names[6]);
    if (row.sign != 1 && row.sign != -1) {
      throw format_error("line " + std::to_string(line_no) + ": sign must be -1 or 1");
    }
    if (truncated != 0 && truncated != 1) {
      throw format_error("line " + std::to_string(line_no) + ": truncated must be 0 or 1");
    }
    row.truncated = truncated == 1;
    rows.push_back(row);
  }
  if (in.bad()) throw io_error("read failure on sample file");
  return rows;
}

/// Everything needed to re-run a simulation or interpret its output.
struct RunManifest {
  std::string version{kVersion};
  std::string subcommand = "simulate";
  double beta = 0.0;
  std::int64_t n = 0;
  ExitMode mode = ExitMode::tau;
  std::optional<double> r;      ///< resolved absolute threshold (tau)
  std::optional<double> gamma;  ///< shrinking-ball exponent (theta)
  std::int64_t n_thr = 0;
  std::uint64_t samples = 0;
  std::uint64_t master_seed = 0;
  unsigned threads = 1;
  double max_time = 0.0;
  std::string timestamp;
};

inline std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

inline nlohmann::json to_json(const RunManifest& m) {
  nlohmann::json j;
  j["version"] = m.version;
  j["subcommand"] = m.subcommand;
  j["beta"] = m.beta;
  j["n"] = m.n;
  j["mode"] = to_string(m.mode);
  j["r"] = m.r ? nlohmann::json(*m.r) : nlohmann::json(nullptr);
  j["gamma"] = m.gamma ? nlohmann::json(*m.gamma) : nlohmann::json(nullptr);
  j["n_thr"] = m.n_thr;
  j["samples"] = m.samples;
  j["master_seed"] = m.master_seed;
  j["threads"] = m.threads;
  j["max_time"] = m.max_time;
  j["timestamp"] = m.timestamp;
  return j;
}

inline ExitMode parse_mode(std::string_view text) {
  if (text == "tau") return ExitMode::tau;
  if (text == "theta") return ExitMode::theta;
  throw config_error("mode must be 'tau' or 'theta', got '" + std::string(text) + "'");
}

inline RunManifest manifest_from_json(const nlohmann::json& j) {
  try {
    RunManifest m;
    m.version = j.value("version", std::string(kVersion));
    m.subcommand = j.value("subcommand", std::string("simulate"));
    m.beta = j.at("beta").get<double>();
    m.n = j.at("n").get<std::int64_t>();
    m.mode = parse_mode(j.value("mode", std::string("tau")));
    if (j.contains("r") && !j["r"].is_null()) m.r = j["r"].get<double>();
    if (j.contains("gamma") && !j["gamma"].is_null()) m.gamma = j["gamma"].get<double>();
    m.n_thr = j.value("n_thr", std::int64_t{0});
    m.samples = j.value("samples", std::uint64_t{0});
    m.master_seed = j.value("master_seed", std::uint64_t{0});
    m.threads = j.value("threads", 1U);
    m.max_time = j.value("max_time", 0.0);
    m.timestamp = j.value("timestamp", std::string{});
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw format_error(std::string("manifest: ") + e.what());
  }
}

inline nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open '" + path + "'");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw format_error("'" + path + "' is not valid JSON: " + e.what());
  }
}

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw io_error("cannot open '" + path + "' for writing");
  out << text;
  out.flush();
  if (!out) throw io_error("write failure on '" + path + "'");
}

inline nlohmann::json to_json(const LimitLaw& law) {
  return {{"a", law.a}, {"shift", law.shift}, {"sigma", law.sigma}};
}

inline nlohmann::json to_json(const GofReport& r) {
  nlohmann::json quantiles = nlohmann::json::array();
  for (const auto& row : r.quantiles) {
    quantiles.push_back({{"q", row.q}, {"empirical", row.empirical}, {"theoretical", row.theoretical}});
  }
  return {{"n", r.n},
          {"truncated", r.truncated},
          {"ks_distance", r.ks_distance},
          {"ks_pvalue", r.ks_pvalue},
          {"sign_fraction_plus", r.sign_fraction_plus},
          {"sign_zscore", r.sign_zscore},
          {"quantiles", quantiles},
          {"mean_empirical", r.mean_empirical},
          {"stderr_empirical", r.stderr_empirical},
          {"mean_theoretical", r.mean_theoretical}};
}

}  // namespace cwexit::io
