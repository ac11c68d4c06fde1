#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "voe/commands.hpp"
#include "voe/errors.hpp"

namespace {

std::vector<voe::Method> parse_methods(const std::vector<std::string>& names) {
  std::vector<voe::Method> out;
  for (const std::string& n : names) {
    if (n == "all") return {std::begin(voe::kAllMethods), std::end(voe::kAllMethods)};
    if (n == "parametric") {
      out.push_back(voe::Method::ParametricHom);
      continue;
    }
    if (n == "nonparametric") {
      out.push_back(voe::Method::NonparametricHom);
      continue;
    }
    out.push_back(voe::parse_method(n));
  }
  return out;
}

// Fills every option of `sub` that was not given on the command line from a
// TOML/INI file. Keys may sit at top level or in a section named after the
// subcommand.
void apply_config(CLI::App* sub, const std::string& file) {
  const std::vector<CLI::ConfigItem> items = CLI::ConfigTOML().from_file(file);
  for (const CLI::ConfigItem& item : items) {
    if (item.name == "++" || item.name == "--") continue;
    if (!item.parents.empty() && !(item.parents.size() == 1 && item.parents[0] == sub->get_name())) continue;
    CLI::Option* opt = sub->get_option_no_throw("--" + item.name);
    if (opt == nullptr || opt->get_name() == "--config")
      throw CLI::ConfigError("unknown option '" + item.name + "' in " + file);
    if (opt->count() > 0) continue;
    if (opt->get_expected_min() == 0) {
      opt->add_result(item.inputs.empty() ? std::string("true") : item.inputs.front());
    } else {
      for (const std::string& v : item.inputs) opt->add_result(v);
    }
  }
}

void add_common(CLI::App* sub, std::string& input, std::string& out_dir, std::uint64_t& seed,
                bool needs_input) {
  // Declared first so that its values are in place before the other options
  // run their callbacks.
  sub->add_option("--config", "TOML/INI file with option values")
      ->check(CLI::ExistingFile)
      ->each([sub](const std::string& file) { apply_config(sub, file); });
  auto* in = sub->add_option("--input", input, "Studies CSV (study_id,tau_hat,se)");
  if (needs_input) in->required();
  sub->add_option("--output-dir", out_dir, "Directory for reports and figures")->capture_default_str();
  sub->add_option("--seed", seed, "Top-level random seed")->capture_default_str();
}

void add_npmle(CLI::App* sub, voe::NpmleConfig& cfg) {
  sub->add_option("--grid-size", cfg.grid_size, "NPMLE grid points")->capture_default_str();
  sub->add_option("--tol", cfg.tol, "NPMLE log-likelihood gain tolerance")->capture_default_str();
  sub->add_option("--max-iter", cfg.max_iter, "NPMLE iteration cap")->capture_default_str();
  sub->add_option("--pad", cfg.pad, "NPMLE grid padding")->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Empirical Bayes value of evidence-based decision making"};
  app.require_subcommand(1);

  std::string input;
  std::string out_dir = "out";
  std::uint64_t seed = 0;

  voe::EstimateConfig est;
  std::vector<std::string> est_methods{"all"};
  std::string cost_table;
  auto* estimate = app.add_subcommand("estimate", "Estimate V, VoE and VoID from a studies file");
  add_common(estimate, input, out_dir, seed, true);
  add_npmle(estimate, est.npmle);
  estimate->add_option("--method", est_methods, "Methods (parametric-hom, parametric-het, "
                                                "nonparametric-hom, nonparametric-het, all)")
      ->delimiter(',')
      ->capture_default_str();
  estimate->add_option("--c-launch", est.c_launch, "Per-unit launch cost")->capture_default_str();
  estimate->add_option("--c-fixed", est.c_fixed, "Fixed cost of an evaluation")->capture_default_str();
  estimate->add_option("--cost-table", cost_table, "CSV of sigma_sq,cost precision costs");
  estimate->add_option("--bins", est.bins, "Standard-error bins for nonparametric-het")->capture_default_str();
  estimate->add_option("--bootstrap", est.bootstrap, "Bootstrap replicates (0 = none)")->capture_default_str();
  estimate->add_option("--level", est.level, "Interval level")->capture_default_str();
  estimate->add_option("--hist-bins", est.histogram_bins, "Histogram bins (0 = Freedman-Diaconis)")
      ->capture_default_str();
  bool no_figure = false;
  estimate->add_flag("--no-figure", no_figure, "Skip the histogram");

  voe::SimulateConfig sim;
  std::vector<std::string> sim_methods{"parametric-hom", "nonparametric-hom"};
  auto* simulate = app.add_subcommand("simulate", "Monte Carlo study of the estimators");
  add_common(simulate, input, out_dir, seed, false);
  add_npmle(simulate, sim.npmle);
  simulate->add_option("--dgp", sim.dgps, "gaussian and/or mixture")->delimiter(',')->capture_default_str();
  simulate->add_option("--method", sim_methods, "parametric-hom and/or nonparametric-hom")
      ->delimiter(',')
      ->capture_default_str();
  simulate->add_option("--reps", sim.reps, "Replications per DGP")->capture_default_str();
  simulate->add_option("--n", sim.n, "Studies per replication")->capture_default_str();
  simulate->add_option("--sigma", sim.sigma, "Known noise standard deviation")->capture_default_str();
  simulate->add_option("--truth-draws", sim.truth_draws, "Monte Carlo draws for mixture truth")
      ->capture_default_str();

  voe::CounterfactualCommandConfig cf;
  std::string grid = "0.25:2.0:0.25";
  std::string mode = "direct";
  auto* counterfactual = app.add_subcommand("counterfactual", "VoE under scaled sampling variances");
  add_common(counterfactual, input, out_dir, seed, true);
  counterfactual->add_option("--lambda-grid", grid, "start:stop:step or comma list")->capture_default_str();
  counterfactual->add_option("--mode", mode, "direct or resample")
      ->check(CLI::IsMember({"direct", "resample"}))
      ->capture_default_str();
  counterfactual->add_option("--reps", cf.reps, "Repetitions per lambda (resample mode)")->capture_default_str();
  counterfactual->add_option("--c-launch", cf.c_launch, "Per-unit launch cost")->capture_default_str();

  voe::GenerateConfig gen;
  std::string gen_name = "studies.csv";
  auto* generate = app.add_subcommand("generate", "Write a moment-calibrated synthetic studies file");
  add_common(generate, input, out_dir, seed, false);
  generate->add_option("--n", gen.target.n, "Number of studies")->capture_default_str();
  generate->add_option("--mean", gen.target.mean_tau_hat, "Target mean of tau_hat")->capture_default_str();
  generate->add_option("--var", gen.target.var_tau_hat, "Target variance of tau_hat")->capture_default_str();
  generate->add_option("--mean-se-sq", gen.target.mean_se_sq, "Target mean of se^2")->capture_default_str();
  generate->add_option("--mean-se", gen.target.mean_se, "Target mean of se")->capture_default_str();
  generate->add_option("--se-lo", gen.target.se_lo, "Smallest standard error")->capture_default_str();
  generate->add_option("--se-hi", gen.target.se_hi, "Largest standard error")->capture_default_str();
  generate->add_option("--file-name", gen_name, "Output file name")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (estimate->parsed()) {
      est.input = input;
      est.seed = seed;
      est.methods = parse_methods(est_methods);
      est.histogram = !no_figure;
      if (!cost_table.empty()) est.cost_table = cost_table;
      const voe::ReportBundle b = voe::cmd_estimate(est);
      voe::write_bundle(b, out_dir);
      std::cout << b.table;
    } else if (simulate->parsed()) {
      sim.seed = seed;
      sim.methods = parse_methods(sim_methods);
      const voe::ReportBundle b = voe::cmd_simulate(sim);
      voe::write_bundle(b, out_dir);
      std::cout << b.table;
    } else if (counterfactual->parsed()) {
      cf.input = input;
      cf.seed = seed;
      cf.lambdas = voe::parse_lambda_grid(grid);
      cf.mode = mode == "direct" ? voe::CounterfactualMode::Direct : voe::CounterfactualMode::Resample;
      const voe::ReportBundle b = voe::cmd_counterfactual(cf);
      voe::write_bundle(b, out_dir);
      std::cout << b.table;
    } else if (generate->parsed()) {
      gen.seed = seed;
      gen.output = std::filesystem::path(out_dir) / gen_name;
      const voe::StudySet s = voe::cmd_generate(gen);
      std::cout << "wrote " << s.size() << " studies to " << gen.output.string() << '\n';
    }
  } catch (const voe::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.exit_code();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 4;
  }
  return 0;
}
