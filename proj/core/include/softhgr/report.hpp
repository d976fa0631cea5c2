#pragma once

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <string>
#include <variant>
#include <vector>

namespace softhgr {

inline constexpr int kReportSchemaVersion = 1;
inline constexpr const char* kVersion = "0.1.0";

struct Metric {
  std::string name;
  std::string unit;
  std::variant<double, std::vector<double>> value;
};

/// Tabular series written as CSV next to the JSON report.
struct Series {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
};

struct ExperimentReport {
  std::string experiment;
  nlohmann::json config = nlohmann::json::object();
  std::vector<Metric> metrics;
  std::vector<Series> series;
  std::uint64_t seed = 0;
  double wall_clock_seconds = 0.0;

  void add(std::string name, std::string unit, double value);
  void add(std::string name, std::string unit, std::vector<double> values);
  const Metric* find(const std::string& name) const;
  double scalar(const std::string& name) const;

  nlohmann::json to_json() const;
  /// Writes <dir>/<experiment>.json and one <dir>/<experiment>_<series>.csv per series.
  void write(const std::filesystem::path& dir) const;
};

/// Checks a report document against the published schema
/// (docs/report.schema.json). Returns the list of problems; empty when valid.
std::vector<std::string> validate_report(const nlohmann::json& report);

}  // namespace softhgr
