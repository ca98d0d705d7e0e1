#pragma once

// Named verification suites behind the command-line tool. A suite turns a
// SuiteConfig into a SuiteReport; the tool only parses flags and writes the
// result.

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "holokit/identities.hpp"

namespace holokit {

struct SuiteConfig {
  std::string command;        // stabilizer | decompose | verify | torsion | metric
  std::string suite = "all";  // verify only
  std::string group;          // empty: suite default
  int group_parameter = 0;    // n for su / sp
  int degree = 0;
  int dimension = 4;
  int active = 0;  // number of active axes; 0 means min(dimension, 4)
  int resolution = 16;
  int band_limit = 1;
  std::map<std::string, double> tolerances;  // overrides by report name
  std::uint64_t seed = 0;
  std::filesystem::path input;
  std::string format = "json";

  /// Throws FormatError on nonpositive tolerances, a resolution that is not a
  /// power of two, or unknown suite, group or format names.
  void validate() const;
  TorusOptions torus() const;
  nlohmann::json to_json() const;
};

struct SuiteReport {
  SuiteConfig config;
  std::vector<IdentityReport> reports;
  nlohmann::json results = nlohmann::json::object();
  bool pass = false;
  double duration_seconds = 0.0;
  std::string version;

  nlohmann::json to_json() const;
  /// One row per identity report.
  std::string to_csv() const;
};

std::vector<std::string> verify_suite_names();

/// Dispatches on config.command. Domain failures (OrbitError) and file
/// errors (FormatError) propagate to the caller.
SuiteReport run_suite(const SuiteConfig& config);

SuiteReport run_stabilizer(const SuiteConfig& config);
SuiteReport run_decompose(const SuiteConfig& config);
SuiteReport run_verify(const SuiteConfig& config);
SuiteReport run_torsion(const SuiteConfig& config);
SuiteReport run_metric(const SuiteConfig& config);

}  // namespace holokit
