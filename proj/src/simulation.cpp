#include "voe/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <optional>

#include "voe/errors.hpp"
#include "voe/parallel.hpp"

namespace voe {

DGPSpec::DGPSpec(std::string name_, PriorSpec prior_, double sigma_, std::size_t n_,
                 double c_launch_)
    : name(std::move(name_)), prior(std::move(prior_)), sigma(sigma_), n(n_), c_launch(c_launch_) {
  if (!(sigma > 0.0)) throw ValidationError("DGPSpec: sigma must be > 0");
  if (n < 1) throw ValidationError("DGPSpec: n must be >= 1");
}

DGPSpec gaussian_dgp(std::size_t n, double sigma) {
  return DGPSpec("gaussian", GaussianPriord(0.0, 1.0), sigma, n);
}

DGPSpec mixture_dgp(std::size_t n, double sigma) {
  GaussianMixturePriord mix({{0.01, -5.0, 0.5}, {0.98, 0.0, 0.5}, {0.01, 5.0, 0.5}});
  return DGPSpec("mixture", std::move(mix), sigma, n);
}

namespace {

double draw_tau(const PriorSpec& prior, RandomStream& rng) {
  if (const auto* g = std::get_if<GaussianPriord>(&prior))
    return g->mu + std::sqrt(g->gamma_sq) * rng.normal();
  const auto& comps = std::get<GaussianMixturePriord>(prior).components();
  const double pick = rng.uniform();
  std::size_t j = 0;
  double acc = comps[0].weight;
  while (pick >= acc && j + 1 < comps.size()) acc += comps[++j].weight;
  return comps[j].mu + std::sqrt(comps[j].gamma_sq) * rng.normal();
}

struct TruthValue {
  double value;
  double se;
  const char* provenance;
};

TruthValue true_payoff(const DGPSpec& dgp, std::size_t draws, const RandomStream& stream) {
  const double sigma_sq = dgp.sigma * dgp.sigma;
  if (const auto* g = std::get_if<GaussianPriord>(&dgp.prior))
    return {expected_payoff(*g, sigma_sq, dgp.c_launch), 0.0, "closed-form"};
  const MonteCarloEstimate mc = mixture_expected_payoff_mc(
      std::get<GaussianMixturePriord>(dgp.prior), sigma_sq, dgp.c_launch, draws, stream);
  return {mc.mean, mc.standard_error, "monte-carlo"};
}

}  // namespace

Replication sample_replication(const DGPSpec& dgp, RandomStream stream) {
  std::vector<Study> studies(dgp.n);
  std::vector<double> latent(dgp.n);
  char id[32];
  for (std::size_t i = 0; i < dgp.n; ++i) {
    const double tau = draw_tau(dgp.prior, stream);
    latent[i] = tau;
    std::snprintf(id, sizeof id, "sim-%06zu", i + 1);
    studies[i] = {id, tau + dgp.sigma * stream.normal(), dgp.sigma};
  }
  return {StudySet(std::move(studies)), std::move(latent)};
}

SimulationTable run_simulation_study(const std::vector<DGPSpec>& dgps, int reps,
                                     const std::vector<Method>& methods, std::uint64_t seed,
                                     const SimulationOptions& options) {
  if (reps < 2) throw ValidationError("run_simulation_study: reps must be >= 2");
  if (dgps.empty()) throw ValidationError("run_simulation_study: no DGPs selected");
  if (methods.empty()) throw ValidationError("run_simulation_study: no estimators selected");
  for (Method m : methods)
    if (m != Method::ParametricHom && m != Method::NonparametricHom)
      throw ValidationError("run_simulation_study: sigma is known and constant, so only "
                            "parametric-hom and nonparametric-hom apply");

  const RandomStream sim_stream = RandomStream::named(seed, "simulation");
  const RandomStream truth_stream = RandomStream::named(seed, "truth");
  EstimatorConfig cfg;
  cfg.npmle = options.npmle;

  SimulationTable table;
  table.reps = reps;
  table.seed = seed;
  for (std::size_t d = 0; d < dgps.size(); ++d) {
    const DGPSpec& dgp = dgps[d];
    cfg.costs = CostModel(dgp.c_launch, 0.0);
    const auto r_count = static_cast<std::size_t>(reps);
    std::vector<std::vector<std::optional<double>>> results(
        methods.size(), std::vector<std::optional<double>>(r_count));

    const RandomStream dgp_stream = sim_stream.substream(d);
    parallel_for(r_count, [&](std::size_t r) {
      const Replication rep = sample_replication(dgp, dgp_stream.substream(r));
      for (std::size_t k = 0; k < methods.size(); ++k) {
        try {
          results[k][r] = estimate(rep.studies, methods[k], cfg).v_hat;
        } catch (const Error&) {
          results[k][r].reset();
        }
      }
    });

    SimulationRow row;
    row.dgp = dgp.name;
    const TruthValue truth = true_payoff(dgp, options.truth_draws, truth_stream.substream(d));
    row.true_value = truth.value;
    row.true_value_se = truth.se;
    row.truth_provenance = truth.provenance;
    for (std::size_t k = 0; k < methods.size(); ++k) {
      SimulationCell cell;
      cell.method = methods[k];
      for (const auto& v : results[k]) {
        if (v)
          cell.estimates.push_back(*v);
        else
          ++cell.failures;
      }
      cell.failed = cell.estimates.empty() ||
                    static_cast<double>(cell.failures) > 0.01 * static_cast<double>(reps);
      if (!cell.estimates.empty()) {
        double sum = 0.0;
        for (double v : cell.estimates) sum += v;
        cell.mean = sum / static_cast<double>(cell.estimates.size());
        std::vector<double> sorted = cell.estimates;
        std::sort(sorted.begin(), sorted.end());
        cell.q_lo = sorted_quantile(sorted, 0.025);
        cell.q_hi = sorted_quantile(sorted, 0.975);
      }
      row.cells.push_back(std::move(cell));
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

double sample_gamma(RandomStream& rng, double shape) {
  if (!(shape > 0.0)) throw ValidationError("sample_gamma: shape must be > 0");
  if (shape < 1.0) {
    // Boost a shape < 1 draw from Gamma(shape + 1).
    const double u = rng.uniform();
    return sample_gamma(rng, shape + 1.0) * std::pow(u, 1.0 / shape);
  }
  // Marsaglia and Tsang.
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x, v;
    do {
      x = rng.normal();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = rng.uniform();
    if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
    if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
  }
}

double sample_beta(RandomStream& rng, double a, double b) {
  const double x = sample_gamma(rng, a);
  const double y = sample_gamma(rng, b);
  return x / (x + y);
}

namespace {

void require(bool ok, const std::string& inequality) {
  if (!ok) throw ValidationError("generate_synthetic_meta: infeasible target, need " + inequality);
}

}  // namespace

StudySet generate_synthetic_meta(const SyntheticTarget& target_in, RandomStream stream) {
  SyntheticTarget t = target_in;
  require(t.n >= 2, "n >= 2");
  require(t.se_lo > 0.0, "se_lo > 0");
  require(t.se_hi >= t.se_lo, "se_hi >= se_lo");
  const bool collapsed = t.se_hi == t.se_lo;
  if (collapsed) {
    t.mean_se = t.se_lo;
    t.mean_se_sq = t.se_lo * t.se_lo;
  }
  require(t.var_tau_hat > t.mean_se_sq, "var_tau_hat > mean_se_sq (positive implied gamma_sq)");

  const std::size_t n = t.n;
  std::vector<double> se(n, t.se_lo);
  if (!collapsed) {
    require(t.mean_se > t.se_lo && t.mean_se < t.se_hi, "se_lo < mean_se < se_hi");
    const double se_var = t.mean_se_sq - t.mean_se * t.mean_se;
    require(se_var > 0.0, "mean_se_sq > mean_se^2");
    const double width = t.se_hi - t.se_lo;
    const double m = (t.mean_se - t.se_lo) / width;
    const double v = se_var / (width * width);
    require(v < m * (1.0 - m), "se variance below the maximum for the se range");
    const double concentration = m * (1.0 - m) / v - 1.0;
    const double a = m * concentration;
    const double b = (1.0 - m) * concentration;
    RandomStream se_rng = stream.substream(0);
    for (double& s : se) s = t.se_lo + width * sample_beta(se_rng, a, b);

    // Rescale toward the target mean of se^2, keeping every se inside the range.
    for (int pass = 0; pass < 50; ++pass) {
      double msq = 0.0;
      for (double s : se) msq += s * s;
      msq /= static_cast<double>(n);
      if (std::abs(msq / t.mean_se_sq - 1.0) < 1e-13) break;
      const double k = std::sqrt(t.mean_se_sq / msq);
      for (double& s : se) s = std::clamp(k * s, t.se_lo, t.se_hi);
    }
  }

  const double gamma = std::sqrt(t.var_tau_hat - t.mean_se_sq);
  RandomStream effect_rng = stream.substream(1);
  std::vector<double> effect(n), noise(n);
  for (std::size_t i = 0; i < n; ++i) {
    effect[i] = gamma * effect_rng.normal();
    noise[i] = se[i] * effect_rng.normal();
  }

  // tau_hat = tau + noise with tau = mean + alpha (effect - mean(effect)) - mean(noise);
  // alpha > 0 solves var(tau_hat) = var_tau_hat exactly.
  const double dn = static_cast<double>(n);
  double e_bar = 0.0, w_bar = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    e_bar += effect[i];
    w_bar += noise[i];
  }
  e_bar /= dn;
  w_bar /= dn;
  double var_e = 0.0, var_w = 0.0, cov = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double de = effect[i] - e_bar;
    const double dw = noise[i] - w_bar;
    var_e += de * de;
    var_w += dw * dw;
    cov += de * dw;
  }
  var_e /= dn;
  var_w /= dn;
  cov /= dn;
  const double disc = cov * cov - var_e * (var_w - t.var_tau_hat);
  if (!(var_e > 0.0) || !(disc >= 0.0))
    throw NumericalError("generate_synthetic_meta: calibration has no solution for this draw");
  const double alpha = (-cov + std::sqrt(disc)) / var_e;
  if (!(alpha > 0.0))
    throw NumericalError("generate_synthetic_meta: calibration produced a non-positive scale");

  std::vector<Study> studies(n);
  char id[32];
  for (std::size_t i = 0; i < n; ++i) {
    const double tau = t.mean_tau_hat + alpha * (effect[i] - e_bar) - w_bar;
    std::snprintf(id, sizeof id, "syn-%05zu", i + 1);
    studies[i] = {id, tau + noise[i], se[i]};
  }
  return StudySet(std::move(studies));
}

}  // namespace voe
