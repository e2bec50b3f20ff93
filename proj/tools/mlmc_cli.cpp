// Command-line front end for the experiment harness.
//
//   mlmc_cli estimate --tmax-sweep --output bias.csv
//   mlmc_cli minmax --n 20 --d 5 --eps 0.05 --runs 10
//   mlmc_cli projeff --config run.json --seed 4
//   mlmc_cli report --inputs bias.csv minmax.csv
//
// A JSON config supplies defaults; flags given on the command line override it.
// MLMC_WORKERS sets the number of worker threads.

#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <nlohmann/json.hpp>

#include "mlmc/error.hpp"
#include "mlmc/experiments.hpp"

namespace {

nlohmann::json parse_value(const std::string& text) {
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception&) {
    return text;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multilevel Monte-Carlo optimum estimators: experiment runner"};
  app.require_subcommand(1, 1);

  std::string config_path, mode, output;
  std::uint64_t seed = 1;
  std::int64_t replications = 0;
  bool timing = false;
  std::vector<std::string> sets;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON config file (flags override it)")->check(CLI::ExistingFile);
    sub->add_option("--mode", mode, "sub-experiment");
    sub->add_option("--seed", seed, "base seed");
    sub->add_option("--replications", replications, "draws / runs / calls (0 keeps the default)");
    sub->add_option("--output,-o", output, "CSV output path");
    sub->add_option("--set", sets, "extra parameter key=value (value parsed as JSON when possible)");
    sub->add_flag("--timing", timing, "add a wall_time column (output no longer reproducible)");
  };

  auto* estimate = app.add_subcommand("estimate", "MLMC / OptEst bias, variance and cost sweeps");
  common(estimate);
  bool tmax_sweep = false, odc = false, cost = false, telescoping = false;
  estimate->add_flag("--tmax-sweep", tmax_sweep, "bias and variance against T_max (default)");
  estimate->add_flag("--odc", odc, "EpochSGD distance bound sweep");
  estimate->add_flag("--cost", cost, "expected-cost law with the unit-cost stub");
  estimate->add_flag("--telescoping", telescoping, "exact expectation with the stub ODC");

  auto* moreau = app.add_subcommand("moreau", "MorGradEst accuracy");
  common(moreau);
  auto* projeff = app.add_subcommand("projeff", "projection-efficient AGD runs");
  common(projeff);

  auto* minmax = app.add_subcommand("minmax", "min-the-max runs (modes: runs, capped, sampler)");
  common(minmax);
  int n = 0, d = 0;
  double eps = 0.0;
  std::int64_t runs = 0;
  minmax->add_option("--n", n, "number of component functions");
  minmax->add_option("--d", d, "dimension");
  minmax->add_option("--eps", eps, "target accuracy as a fraction of G R");
  minmax->add_option("--runs", runs, "seeded runs");
  std::string preset;
  minmax->add_option("--preset", preset, "constant preset: desk (default) or full");

  auto* composite = app.add_subcommand("composite", "composite AGD runs");
  common(composite);
  auto* unbiased = app.add_subcommand("unbiased", "exactly unbiased estimator (modes: draws, ellipsoid)");
  common(unbiased);
  auto* report = app.add_subcommand("report", "aggregate the checks recorded in CSV files");
  common(report);
  std::vector<std::string> inputs;
  report->add_option("--inputs", inputs, "CSV files written by other subcommands");

  CLI11_PARSE(app, argc, argv);
  CLI::App* sub = app.get_subcommands().front();

  try {
    mlmc::ExperimentConfig config;
    if (!config_path.empty()) {
      std::ifstream in(config_path);
      config = mlmc::config_from_json(nlohmann::json::parse(in));
    }
    config.experiment = sub->get_name();
    auto given = [&](const char* flag) { return sub->count(flag) > 0; };
    if (given("--mode")) config.mode = mode;
    if (given("--seed")) config.seed = seed;
    if (given("--replications")) config.replications = replications;
    if (given("--output")) config.output = output;
    if (timing) config.timing = true;
    for (const std::string& kv : sets) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos || eq == 0) throw mlmc::InvalidInput("--set expects key=value, got " + kv);
      config.params[kv.substr(0, eq)] = parse_value(kv.substr(eq + 1));
    }
    if (sub == estimate) {
      if (tmax_sweep) config.mode = "tmax-sweep";
      if (odc) config.mode = "odc";
      if (cost) config.mode = "cost";
      if (telescoping) config.mode = "telescoping";
    }
    if (sub == minmax) {
      if (given("--n")) config.params["n"] = n;
      if (given("--d")) config.params["d"] = d;
      if (given("--eps")) config.params["eps_fraction"] = eps;
      if (given("--runs")) config.replications = runs;
      if (given("--preset")) config.params["preset"] = preset;
    }
    if (sub == report && given("--inputs")) config.params["inputs"] = inputs;

    const mlmc::ExperimentReport result = mlmc::run_experiment(config);
    if (config.output.empty()) {
      std::cout << result.csv();
    } else {
      result.print_summary(std::cout);
    }
    return result.passed() ? 0 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
