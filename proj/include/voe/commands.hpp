#pragma once

// Batch commands behind the `voe` CLI. Each command is a pure function of its
// input file, configuration and seed, and returns a ReportBundle that the CLI
// writes to the output directory.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "voe/counterfactual.hpp"
#include "voe/estimators.hpp"
#include "voe/simulation.hpp"

namespace voe {

struct ReportBundle {
  std::string stem;                            // base name of the output files
  nlohmann::json document;                     // machine-readable results
  std::string table;                           // human-readable tables, 4 decimals
  std::map<std::string, std::string> figures;  // file name -> SVG text
};

/// Writes <stem>.json, <stem>.txt and every figure under `dir`.
void write_bundle(const ReportBundle& bundle, const std::filesystem::path& dir);

struct EstimateConfig {
  std::filesystem::path input;
  std::vector<Method> methods{std::begin(kAllMethods), std::end(kAllMethods)};
  double c_launch = 0.0;
  double c_fixed = 0.0;
  std::optional<std::filesystem::path> cost_table;
  NpmleConfig npmle;
  int bins = 5;
  int bootstrap = 0;
  double level = 0.95;
  std::uint64_t seed = 0;
  bool histogram = true;
  int histogram_bins = 0;  // 0 = Freedman-Diaconis
};

struct SimulateConfig {
  std::vector<std::string> dgps{"gaussian", "mixture"};
  std::vector<Method> methods{Method::ParametricHom, Method::NonparametricHom};
  int reps = 1000;
  std::size_t n = 500;
  double sigma = 0.1;
  std::size_t truth_draws = kDefaultTruthDraws;
  NpmleConfig npmle;
  std::uint64_t seed = 0;
};

struct CounterfactualCommandConfig {
  std::filesystem::path input;
  std::vector<double> lambdas{0.25, 0.5, 0.75, 1.0, 1.25, 1.5, 1.75, 2.0};
  CounterfactualMode mode = CounterfactualMode::Direct;
  int reps = 500;
  double c_launch = 0.0;
  std::uint64_t seed = 0;
};

struct GenerateConfig {
  SyntheticTarget target;
  std::uint64_t seed = 0;
  std::filesystem::path output = "studies.csv";
};

ReportBundle cmd_estimate(const EstimateConfig& cfg);
ReportBundle cmd_simulate(const SimulateConfig& cfg);
ReportBundle cmd_counterfactual(const CounterfactualCommandConfig& cfg);
/// Writes the synthetic studies file and returns the set that was written.
StudySet cmd_generate(const GenerateConfig& cfg);

/// Parses "a:b:step" or a comma-separated list into a lambda grid.
std::vector<double> parse_lambda_grid(const std::string& spec);

nlohmann::json to_json(const PayoffEstimate& e);
nlohmann::json to_json(const PriorMoments& m);

}  // namespace voe
