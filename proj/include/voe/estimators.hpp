#pragma once

// Empirical Bayes estimates of the expected payoff V and of the values VoE and
// VoID from a collection of (estimate, standard error) pairs. Standard errors
// are plugged in as the known sampling standard deviations.

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "voe/gaussian.hpp"
#include "voe/npmle.hpp"
#include "voe/random.hpp"
#include "voe/studies.hpp"

namespace voe {

/// Floor applied to a non-positive deconvolved prior variance.
inline constexpr double kGammaSqFloor = 1e-12;

struct PriorMoments {
  double mu_hat = 0.0;
  double gamma_sq_hat = 0.0;
  double raw_gamma_sq = 0.0;
  double mean_se_sq = 0.0;
  double var_tau_hat = 0.0;
  bool clamped = false;

  GaussianPriord prior() const { return {mu_hat, gamma_sq_hat}; }
};

/// Moment deconvolution: mu = mean(tau_hat), gamma_sq = var(tau_hat) - mean(se^2),
/// with var using denominator n.
PriorMoments estimate_prior_moments(const StudySet& data);

/// The same deconvolution from already computed summary statistics.
PriorMoments estimate_prior_moments(double mean_tau_hat, double var_tau_hat, double mean_se_sq);

enum class Method { ParametricHom, ParametricHet, NonparametricHom, NonparametricHet };

inline constexpr Method kAllMethods[] = {Method::ParametricHom, Method::ParametricHet,
                                         Method::NonparametricHom, Method::NonparametricHet};

std::string_view method_name(Method m);
/// Accepts "parametric-hom", "parametric-het", "nonparametric-hom", "nonparametric-het".
Method parse_method(std::string_view name);

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  double level = 0.95;
};

struct BinDiagnostic {
  double se_lo = 0.0;
  double se_hi = 0.0;
  std::size_t count = 0;
  int iterations = 0;
  bool converged = false;
  bool grid_widened = false;
  double log_likelihood = 0.0;
};

struct Diagnostics {
  bool gamma_sq_clamped = false;
  std::size_t posterior_fallbacks = 0;
  std::vector<BinDiagnostic> bins;  // one entry per NPMLE fit
  std::vector<std::string> notes;
};

struct PayoffEstimate {
  Method method = Method::ParametricHet;
  double v_hat = 0.0;
  double voe = 0.0;
  double void_value = 0.0;
  double mu_hat = 0.0;
  double information_cost = 0.0;
  std::optional<Interval> voe_interval;
  std::optional<Interval> void_interval;
  Diagnostics diagnostics;
};

struct EstimatorConfig {
  CostModel costs;
  NpmleConfig npmle;
  int n_bins = 5;
};

/// V from the Gaussian closed form at the average sampling variance.
PayoffEstimate parametric_homoskedastic(const StudySet& data, const CostModel& costs = {});

/// V as the average over studies of the closed form at each study's variance.
PayoffEstimate parametric_heteroskedastic(const StudySet& data, const CostModel& costs = {});

/// NPMLE of the distribution of tau/se pooled over all studies; V is the
/// average censored plug-in posterior mean.
PayoffEstimate nonparametric_homoskedastic(const StudySet& data, const CostModel& costs = {},
                                           const NpmleConfig& cfg = {});

/// As nonparametric_homoskedastic but with a separate NPMLE per quantile bin
/// of the standard errors. Bins with fewer than two studies are merged into a
/// neighbour.
PayoffEstimate nonparametric_heteroskedastic(const StudySet& data, const CostModel& costs = {},
                                             int n_bins = 5, const NpmleConfig& cfg = {});

PayoffEstimate estimate(const StudySet& data, Method method, const EstimatorConfig& cfg = {});

struct BootstrapResult {
  Interval voe;
  Interval void_value;
  Interval v_hat;
  int replicates = 0;
  int failures = 0;
};

/// Pairs bootstrap over studies with percentile intervals. Replicate b draws
/// from `stream.substream(b)`. Failed replicates are skipped; more than 5%
/// failures raise a NumericalError.
BootstrapResult bootstrap_interval(const StudySet& data, Method method,
                                   const EstimatorConfig& cfg, int replicates, double level,
                                   const RandomStream& stream);

/// Linear-interpolation quantile of already sorted values, probability p in [0, 1].
double sorted_quantile(const std::vector<double>& sorted, double p);

}  // namespace voe
