#pragma once

#include <chrono>
#include <filesystem>
#include <fstream>
#include <string>

#include <json.hpp>

#include "warplab/core.hpp"

namespace warplab {

using Json = nlohmann::ordered_json;

// Semantic version of the report.json layout; bumped on any field change.
inline const char* report_schema_version() { return "1.0.0"; }

inline std::string iso_timestamp() {
  auto now = std::chrono::system_clock::now();
  std::time_t t = std::chrono::system_clock::to_time_t(now);
  char buf[32];
  std::strftime(buf, sizeof buf, "%FT%TZ", std::gmtime(&t));
  return buf;
}

// Every report carries the schema version, the suite name, the seed, and an
// echo of the configuration that produced it.
inline Json report_skeleton(const std::string& suite, const Json& config_echo,
                            std::uint64_t seed) {
  Json rep;
  rep["schema_version"] = report_schema_version();
  rep["suite"] = suite;
  rep["generated_at"] = iso_timestamp();
  rep["seed"] = seed;
  rep["config"] = config_echo;
  rep["results"] = Json::object();
  rep["passed"] = false;
  rep["notes"] = Json::array();
  return rep;
}

inline void write_report(const std::filesystem::path& dir, const Json& rep) {
  std::filesystem::create_directories(dir);
  std::ofstream os(dir / "report.json");
  if (!os) throw std::runtime_error("cannot write report.json under " + dir.string());
  os << rep.dump(2) << "\n";
}

inline void write_rows_csv(const std::filesystem::path& path,
                           const std::string& header,
                           const std::vector<std::vector<double>>& rows) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os << header << "\n";
  os.precision(17);
  for (const auto& row : rows) {
    for (size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << row[i];
    os << "\n";
  }
}

}  // namespace warplab
