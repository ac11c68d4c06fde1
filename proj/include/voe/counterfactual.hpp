#pragma once

// Value of evidence-based decisions when every study's sampling variance is
// multiplied by a factor lambda, under the Gaussian empirical Bayes prior.

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <vector>

#include "voe/estimators.hpp"
#include "voe/random.hpp"
#include "voe/studies.hpp"

namespace voe {

/// (1/n) sum_i V(lambda se_i^2) - max{mu - c_L, 0} under the fitted prior.
double counterfactual_direct(const PriorMoments& moments, const Eigen::VectorXd& se_sq,
                             double lambda, double c_launch);

struct ResampleSummary {
  double mean = 0.0;
  double standard_error = 0.0;
  Interval interval;  // 2.5% and 97.5% percentiles across repetitions
  std::vector<double> values;
};

/// Simulates `reps` synthetic study sets with tau_i* ~ N(mu, gamma_sq) and
/// se_i* = sqrt(lambda) se_i, re-estimates VoE with the heteroskedastic
/// parametric estimator on each, and summarizes. Repetition r uses
/// `stream.substream(r)`.
ResampleSummary counterfactual_resample(const StudySet& data, double lambda, int reps,
                                        double c_launch, const RandomStream& stream);

enum class CounterfactualMode { Direct, Resample };

struct CounterfactualConfig {
  CounterfactualMode mode = CounterfactualMode::Direct;
  double c_launch = 0.0;
  int reps = 500;
  std::uint64_t seed = 0;
};

struct CounterfactualCurve {
  std::vector<double> lambdas;
  std::vector<double> voe_values;
  std::vector<std::optional<Interval>> intervals;
  CounterfactualMode mode = CounterfactualMode::Direct;
  int reps = 0;
  std::uint64_t seed = 0;
};

CounterfactualCurve lambda_sweep(const StudySet& data, const std::vector<double>& lambdas,
                                 const CounterfactualConfig& cfg);

}  // namespace voe
