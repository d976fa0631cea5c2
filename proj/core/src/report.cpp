#include "softhgr/report.hpp"

#include "softhgr/error.hpp"

#include <cmath>
#include <fstream>

namespace softhgr {

void ExperimentReport::add(std::string name, std::string unit, double value) {
  metrics.push_back(Metric{std::move(name), std::move(unit), value});
}

void ExperimentReport::add(std::string name, std::string unit, std::vector<double> values) {
  metrics.push_back(Metric{std::move(name), std::move(unit), std::move(values)});
}

const Metric* ExperimentReport::find(const std::string& name) const {
  for (const auto& m : metrics)
    if (m.name == name) return &m;
  return nullptr;
}

double ExperimentReport::scalar(const std::string& name) const {
  const Metric* m = find(name);
  require(m != nullptr && std::holds_alternative<double>(m->value), ErrorKind::invalid_argument,
          "report has no scalar metric \"" + name + "\"");
  return std::get<double>(m->value);
}

nlohmann::json ExperimentReport::to_json() const {
  nlohmann::json ms = nlohmann::json::array();
  for (const auto& m : metrics) {
    nlohmann::json j{{"name", m.name}, {"unit", m.unit}};
    if (std::holds_alternative<double>(m.value)) j["value"] = std::get<double>(m.value);
    else j["values"] = std::get<std::vector<double>>(m.value);
    ms.push_back(std::move(j));
  }
  nlohmann::json names = nlohmann::json::array();
  for (const auto& s : series) names.push_back(s.name);
  return {{"schema_version", kReportSchemaVersion},
          {"experiment", experiment},
          {"config", config},
          {"metrics", ms},
          {"series", names},
          {"environment", {{"seed", seed}, {"version", kVersion}}},
          {"wall_clock_seconds", wall_clock_seconds}};
}

void ExperimentReport::write(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  {
    std::ofstream out(dir / (experiment + ".json"));
    require(static_cast<bool>(out), ErrorKind::io, "cannot write report to " + dir.string());
    out << to_json().dump(2) << '\n';
  }
  for (const auto& s : series) {
    std::ofstream out(dir / (experiment + "_" + s.name + ".csv"));
    require(static_cast<bool>(out), ErrorKind::io, "cannot write series to " + dir.string());
    for (std::size_t c = 0; c < s.columns.size(); ++c) out << (c ? "," : "") << s.columns[c];
    out << '\n';
    out.precision(17);
    for (const auto& row : s.rows) {
      for (std::size_t c = 0; c < row.size(); ++c) {
        if (c) out << ',';
        if (std::isfinite(row[c])) out << row[c];
      }
      out << '\n';
    }
  }
}

std::vector<std::string> validate_report(const nlohmann::json& r) {
  std::vector<std::string> problems;
  if (!r.is_object()) return {"report must be an object"};
  if (!r.contains("schema_version") || !r["schema_version"].is_number_integer() ||
      r["schema_version"].get<int>() != kReportSchemaVersion) {
    problems.push_back("schema_version must equal " + std::to_string(kReportSchemaVersion));
  }
  if (!r.contains("experiment") || !r["experiment"].is_string() ||
      r["experiment"].get<std::string>().empty()) {
    problems.push_back("experiment must be a non-empty string");
  }
  if (!r.contains("config") || !r["config"].is_object()) problems.push_back("config must be an object");
  if (!r.contains("wall_clock_seconds") || !r["wall_clock_seconds"].is_number() ||
      r["wall_clock_seconds"].get<double>() < 0.0) {
    problems.push_back("wall_clock_seconds must be a nonnegative number");
  }
  if (!r.contains("environment") || !r["environment"].is_object() ||
      !r["environment"].contains("seed") || !r["environment"].contains("version")) {
    problems.push_back("environment must hold seed and version");
  }
  if (!r.contains("metrics") || !r["metrics"].is_array()) {
    problems.push_back("metrics must be an array");
    return problems;
  }
  for (const auto& m : r["metrics"]) {
    const std::string name = m.contains("name") && m["name"].is_string() ? m["name"].get<std::string>() : "";
    if (name.empty()) problems.push_back("metric without a name");
    if (!m.contains("unit") || !m["unit"].is_string() || m["unit"].get<std::string>().empty()) {
      problems.push_back("metric \"" + name + "\" has no unit");
    }
    const bool scalar = m.contains("value");
    const bool vector = m.contains("values");
    if (scalar == vector) {
      problems.push_back("metric \"" + name + "\" needs exactly one of value / values");
      continue;
    }
    auto finite = [](const nlohmann::json& v) { return v.is_number() && std::isfinite(v.get<double>()); };
    if (scalar && !finite(m["value"])) problems.push_back("metric \"" + name + "\" is not finite");
    if (vector) {
      if (!m["values"].is_array()) {
        problems.push_back("metric \"" + name + "\" values must be an array");
      } else {
        for (const auto& v : m["values"]) {
          if (!finite(v)) {
            problems.push_back("metric \"" + name + "\" has a non-finite entry");
            break;
          }
        }
      }
    }
  }
  return problems;
}

}  // namespace softhgr
