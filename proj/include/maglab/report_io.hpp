#pragma once

// Report rows, JSON/CSV serialization and run manifests.  Output is a pure
// function of the rows: no timestamps, fixed key order, round-trip doubles.

#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include "maglab/identity_lab.hpp"

namespace maglab {

using Json = nlohmann::ordered_json;

inline constexpr const char* kVersion = "1.0.0";

enum class RowStatus { Pass, Fail, Skipped };

inline std::string to_string(RowStatus s) {
  switch (s) {
    case RowStatus::Pass: return "pass";
    case RowStatus::Fail: return "fail";
    case RowStatus::Skipped: return "skipped";
  }
  return "?";
}

/// One line of a battery report.
struct ResultRow {
  std::string battery;
  std::string check;
  std::string anchor;
  std::string backend;
  std::string resolution;
  int member = -1;  // battery member index, -1 when not per-member
  double left = 0.0, right = 0.0;
  double residual = 0.0;
  double tolerance = 0.0;
  RowStatus status = RowStatus::Pass;
  std::string note;
  std::map<std::string, double> details;

  bool failed() const { return status == RowStatus::Fail; }
};

inline ResultRow row_from(const std::string& battery, const IdentityReport& r, int member = -1) {
  ResultRow row;
  row.battery = battery;
  row.check = r.name;
  row.anchor = r.anchor;
  row.backend = r.backend;
  row.resolution = r.resolution;
  row.member = member;
  row.left = r.left;
  row.right = r.right;
  row.residual = r.residual();
  row.tolerance = r.tolerance;
  row.status = r.pass ? RowStatus::Pass : RowStatus::Fail;
  row.details = r.details;
  return row;
}

inline ResultRow skipped_row(const std::string& battery, const std::string& anchor, const std::string& backend,
                             const std::string& why) {
  ResultRow row;
  row.battery = battery;
  row.check = battery;
  row.anchor = anchor;
  row.backend = backend;
  row.status = RowStatus::Skipped;
  row.note = why;
  return row;
}

// Non-finite doubles have no JSON form; they are written as strings.
inline Json json_number(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return "nan";
  return v > 0 ? "inf" : "-inf";
}

inline Json to_json(const ResultRow& r) {
  Json j;
  j["battery"] = r.battery;
  j["check"] = r.check;
  j["anchor"] = r.anchor;
  j["backend"] = r.backend;
  j["resolution"] = r.resolution;
  j["member"] = r.member;
  j["left"] = json_number(r.left);
  j["right"] = json_number(r.right);
  j["residual"] = json_number(r.residual);
  j["tolerance"] = json_number(r.tolerance);
  j["status"] = to_string(r.status);
  if (!r.note.empty()) j["note"] = r.note;
  Json d = Json::object();
  for (const auto& [k, v] : r.details) d[k] = json_number(v);
  j["details"] = d;
  return j;
}

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << v;
  return os.str();
}

// Shortest representation that round-trips.
inline std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

/// A CSV table of strings; numbers are formatted by the caller.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  void write(std::ostream& os) const {
    auto line = [&](const std::vector<std::string>& cells) {
      for (std::size_t i = 0; i < cells.size(); ++i) os << (i ? "," : "") << csv_escape(cells[i]);
      os << '\n';
    };
    line(header);
    for (const auto& r : rows) line(r);
  }
  std::string str() const {
    std::ostringstream os;
    write(os);
    return os.str();
  }
};

inline CsvTable summary_table(const std::vector<ResultRow>& rows) {
  CsvTable t;
  t.header = {"battery", "identity", "anchor", "backend", "resolution", "member", "residual", "tolerance", "status"};
  for (const auto& r : rows)
    t.rows.push_back({r.battery, r.check, r.anchor, r.backend, r.resolution, std::to_string(r.member),
                      format_double(r.residual), format_double(r.tolerance), to_string(r.status)});
  return t;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os << text;
}

/// Run manifest: what produced the files next to it.
inline Json manifest(const std::string& command, const Json& config, const std::vector<std::string>& files) {
  Json m;
  m["tool"] = "maglab";
  m["version"] = kVersion;
  m["command"] = command;
  m["config_hash"] = hex64(fnv1a(config.dump()));
  m["seed"] = config.contains("seed") ? config["seed"] : Json();
  m["versions"] = {{"maglab", kVersion},
                   {"compiler", __VERSION__},
                   {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                 std::to_string(EIGEN_MINOR_VERSION)},
                   {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                         std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                         std::to_string(NLOHMANN_JSON_VERSION_PATCH)},
                   {"cxx_standard", static_cast<long>(__cplusplus)}};
  m["files"] = files;
  return m;
}

}  // namespace maglab
