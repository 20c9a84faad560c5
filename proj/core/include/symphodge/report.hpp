#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace symphodge {

/// Configuration of one experiment run; every field has a default and the
/// whole struct round-trips through the flat key=value file format.
struct ExperimentConfig {
  std::string experiment = "identities";
  int n = 1;
  std::vector<std::vector<int>> shapes;  // empty: per-experiment defaults
  int order = 2;
  double cutoff = 1e-8;
  std::uint64_t seed = 1;
  int samples = 50;
  std::string out = ".";

  std::vector<std::vector<int>> shapes_or_default() const;
};

ExperimentConfig parse_config_file(const std::string& path);
void write_config_file(const ExperimentConfig& cfg, const std::string& path);
std::vector<int> parse_shape(const std::string& text);    // "9x8x8x8"
std::string shape_to_string(const std::vector<int>& shape);

struct Assertion {
  std::string name;
  bool pass = false;
  double value = 0.0;
  double threshold = 0.0;
};

struct ExperimentReport {
  std::string experiment;
  nlohmann::json data;  // deterministic: object keys are sorted
  std::vector<Assertion> assertions;
  std::vector<std::string> csv_header;
  std::vector<std::vector<std::string>> csv_rows;

  bool pass() const;
  nlohmann::json to_json(const ExperimentConfig& cfg) const;
};

/// Write <out>/<experiment>.json and <out>/<experiment>.csv; byte-identical
/// for identical config + seed.
void write_report(const ExperimentReport& report, const ExperimentConfig& cfg);

// ---- the experiment batteries behind the CLI subcommands ----
ExperimentReport run_identities(const ExperimentConfig& cfg);
ExperimentReport run_operators(const ExperimentConfig& cfg);
ExperimentReport run_harmonic(const ExperimentConfig& cfg);
ExperimentReport run_decompose(const ExperimentConfig& cfg);
ExperimentReport run_cohomology(const ExperimentConfig& cfg);
ExperimentReport run_poincare(const ExperimentConfig& cfg);
ExperimentReport run_gaffney(const ExperimentConfig& cfg);

ExperimentReport run_experiment(const ExperimentConfig& cfg);  // dispatch by name

}  // namespace symphodge
