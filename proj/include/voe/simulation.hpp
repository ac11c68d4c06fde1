#pragma once

// Monte Carlo study of the empirical Bayes estimators and a moment-calibrated
// generator of synthetic meta-analytic study sets.

#include <cstddef>
#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "voe/estimators.hpp"
#include "voe/gaussian.hpp"
#include "voe/mixture.hpp"
#include "voe/random.hpp"
#include "voe/studies.hpp"

namespace voe {

using PriorSpec = std::variant<GaussianPriord, GaussianMixturePriord>;

struct DGPSpec {
  std::string name;
  PriorSpec prior;
  double sigma = 0.1;
  std::size_t n = 500;
  double c_launch = 0.0;

  DGPSpec(std::string name, PriorSpec prior, double sigma, std::size_t n, double c_launch = 0.0);
};

/// tau ~ N(0, 1).
DGPSpec gaussian_dgp(std::size_t n = 500, double sigma = 0.1);
/// tau ~ 0.01 N(-5, 1/2) + 0.98 N(0, 1/2) + 0.01 N(5, 1/2); mean 0, variance 1.
DGPSpec mixture_dgp(std::size_t n = 500, double sigma = 0.1);

struct Replication {
  StudySet studies;
  std::vector<double> latent_tau;
};

/// n draws tau_i from the prior and tau_hat_i = tau_i + sigma u_i; every
/// study reports se = sigma.
Replication sample_replication(const DGPSpec& dgp, RandomStream stream);

struct SimulationCell {
  Method method = Method::ParametricHom;
  double mean = 0.0;
  double q_lo = 0.0;  // 2.5% quantile across replications
  double q_hi = 0.0;  // 97.5% quantile
  int failures = 0;
  bool failed = false;
  std::vector<double> estimates;
};

struct SimulationRow {
  std::string dgp;
  double true_value = 0.0;
  double true_value_se = 0.0;
  std::string truth_provenance;  // "closed-form" or "monte-carlo"
  std::vector<SimulationCell> cells;
};

struct SimulationTable {
  int reps = 0;
  std::uint64_t seed = 0;
  std::vector<SimulationRow> rows;
};

struct SimulationOptions {
  NpmleConfig npmle;
  std::size_t truth_draws = kDefaultTruthDraws;
};

/// Runs `reps` replications of every DGP and evaluates each selected
/// estimator on each one. Because sigma is known and constant within a
/// replication only the homoskedastic estimators are admissible.
SimulationTable run_simulation_study(const std::vector<DGPSpec>& dgps, int reps,
                                     const std::vector<Method>& methods, std::uint64_t seed,
                                     const SimulationOptions& options = {});

/// Summary statistics a synthetic study set is calibrated to. Defaults are
/// the published summaries of a large medical meta-analytic collection.
struct SyntheticTarget {
  double mean_tau_hat = -0.1421;
  double var_tau_hat = 1.6677;
  double mean_se_sq = 0.7641;
  double mean_se = 0.7471;
  double se_lo = 0.0099;
  double se_hi = 2.1232;
  std::size_t n = 8821;
};

/// Draws standard errors from a scaled beta on [se_lo, se_hi] matched to
/// (mean_se, mean_se_sq), latent effects from N(mean, var_tau_hat - mean_se_sq)
/// and tau_hat = tau + se u. The draws are then calibrated so the sample mean
/// and variance (denominator n) of tau_hat and the mean of se^2 hit the
/// targets. A collapsed se range produces a homoskedastic set.
StudySet generate_synthetic_meta(const SyntheticTarget& target, RandomStream stream);

/// Gamma(shape, 1) and Beta(a, b) variates from a random stream.
double sample_gamma(RandomStream& rng, double shape);
double sample_beta(RandomStream& rng, double a, double b);

}  // namespace voe
