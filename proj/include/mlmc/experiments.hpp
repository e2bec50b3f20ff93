#pragma once

#include <cstdint>
#include <iosfwd>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

namespace mlmc {

inline constexpr const char* kCsvSchema = "mlmc-csv/1";

struct ExperimentConfig {
  // estimate, moreau, projeff, minmax, composite, unbiased or report.
  std::string experiment;
  // Sub-experiment, e.g. tmax-sweep / odc / cost / telescoping for estimate.
  std::string mode;
  // Experiment parameters; missing keys take the documented defaults.
  nlohmann::json params = nlohmann::json::object();
  std::uint64_t seed = 1;
  // Replications (draws, runs or calls depending on the experiment); 0 keeps the default.
  std::int64_t replications = 0;
  // CSV destination; empty means no file.
  std::string output;
  // Adds a wall_time column; off by default so output is reproducible.
  bool timing = false;
};

// Reads the keys of a JSON config object into a config (flags are applied
// on top by the caller).
ExperimentConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const ExperimentConfig& config);

struct Check {
  std::string name;
  bool pass = false;
  std::string detail;
};

struct ExperimentReport {
  std::string experiment;
  std::string mode;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
  // Extra "# key,value" lines such as fitted slopes.
  std::vector<std::pair<std::string, double>> summary;
  std::vector<Check> checks;

  bool passed() const;
  std::string csv() const;
  void print_summary(std::ostream& out) const;
};

// Runs the experiment and writes the CSV when config.output is set.
// Throws InvalidInput for unknown experiments or modes.
ExperimentReport run_experiment(const ExperimentConfig& config);

// Known experiment ids and their default modes.
std::vector<std::string> experiment_names();

}  // namespace mlmc
