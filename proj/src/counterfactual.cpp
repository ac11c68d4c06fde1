#include "voe/counterfactual.hpp"

#include <algorithm>
#include <cmath>

#include "voe/errors.hpp"
#include "voe/parallel.hpp"

namespace voe {

double counterfactual_direct(const PriorMoments& moments, const Eigen::VectorXd& se_sq,
                             double lambda, double c_launch) {
  if (!(lambda > 0.0)) throw ValidationError("counterfactual: lambda must be > 0");
  const GaussianPriord prior = moments.prior();
  const Eigen::VectorXd scaled = lambda * se_sq;
  return mean_expected_payoff(prior, scaled, c_launch) - payoff_no_info(prior, c_launch);
}

ResampleSummary counterfactual_resample(const StudySet& data, double lambda, int reps,
                                        double c_launch, const RandomStream& stream) {
  if (!(lambda > 0.0)) throw ValidationError("counterfactual: lambda must be > 0");
  if (reps < 1) throw ValidationError("counterfactual: reps must be >= 1");

  const PriorMoments moments = estimate_prior_moments(data);
  const double mu = moments.mu_hat;
  const double gamma = std::sqrt(moments.gamma_sq_hat);
  const double scale = std::sqrt(lambda);
  const CostModel costs(c_launch, 0.0);

  ResampleSummary out;
  out.values.resize(static_cast<std::size_t>(reps));
  parallel_for(out.values.size(), [&](std::size_t r) {
    RandomStream rng = stream.substream(r);
    std::vector<Study> synthetic(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) {
      const double se = scale * data[i].se;
      const double tau = mu + gamma * rng.normal();
      synthetic[i] = {data[i].id, tau + se * rng.normal(), se};
    }
    out.values[r] = parametric_heteroskedastic(StudySet(std::move(synthetic)), costs).voe;
  });

  double sum = 0.0;
  for (double v : out.values) sum += v;
  const double n = static_cast<double>(reps);
  out.mean = sum / n;
  if (reps > 1) {
    double ss = 0.0;
    for (double v : out.values) ss += (v - out.mean) * (v - out.mean);
    out.standard_error = std::sqrt(ss / (n - 1) / n);
  }
  std::vector<double> sorted = out.values;
  std::sort(sorted.begin(), sorted.end());
  out.interval = {sorted_quantile(sorted, 0.025), sorted_quantile(sorted, 0.975), 0.95};
  return out;
}

CounterfactualCurve lambda_sweep(const StudySet& data, const std::vector<double>& lambdas,
                                 const CounterfactualConfig& cfg) {
  if (lambdas.empty()) throw ValidationError("lambda_sweep: lambda grid is empty");
  for (std::size_t i = 0; i < lambdas.size(); ++i) {
    if (!(lambdas[i] > 0.0) || !std::isfinite(lambdas[i]))
      throw ValidationError("lambda_sweep: lambdas must be finite and > 0");
    if (i > 0 && !(lambdas[i] > lambdas[i - 1]))
      throw ValidationError("lambda_sweep: lambdas must be strictly increasing");
  }

  CounterfactualCurve curve;
  curve.lambdas = lambdas;
  curve.mode = cfg.mode;
  curve.seed = cfg.seed;
  if (cfg.mode == CounterfactualMode::Direct) {
    const PriorMoments moments = estimate_prior_moments(data);
    const Eigen::VectorXd se_sq = data.variances();
    for (double lambda : lambdas) {
      curve.voe_values.push_back(counterfactual_direct(moments, se_sq, lambda, cfg.c_launch));
      curve.intervals.emplace_back();
    }
    return curve;
  }

  curve.reps = cfg.reps;
  const RandomStream base = RandomStream::named(cfg.seed, "counterfactual");
  for (std::size_t k = 0; k < lambdas.size(); ++k) {
    const ResampleSummary s =
        counterfactual_resample(data, lambdas[k], cfg.reps, cfg.c_launch, base.substream(k));
    curve.voe_values.push_back(s.mean);
    curve.intervals.emplace_back(s.interval);
  }
  return curve;
}

}  // namespace voe
