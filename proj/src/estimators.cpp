#include "voe/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "voe/errors.hpp"
#include "voe/parallel.hpp"

namespace voe {

PriorMoments estimate_prior_moments(double mean_tau_hat, double var_tau_hat, double mean_se_sq) {
  PriorMoments m;
  m.mu_hat = mean_tau_hat;
  m.var_tau_hat = var_tau_hat;
  m.mean_se_sq = mean_se_sq;
  m.raw_gamma_sq = var_tau_hat - mean_se_sq;
  m.clamped = !(m.raw_gamma_sq >= kGammaSqFloor);
  m.gamma_sq_hat = m.clamped ? kGammaSqFloor : m.raw_gamma_sq;
  return m;
}

PriorMoments estimate_prior_moments(const StudySet& data) {
  const Eigen::VectorXd t = data.tau_hats();
  const double mean = t.mean();
  const double var = (t.array() - mean).square().mean();
  return estimate_prior_moments(mean, var, data.variances().mean());
}

std::string_view method_name(Method m) {
  switch (m) {
    case Method::ParametricHom: return "parametric-hom";
    case Method::ParametricHet: return "parametric-het";
    case Method::NonparametricHom: return "nonparametric-hom";
    case Method::NonparametricHet: return "nonparametric-het";
  }
  return "unknown";
}

Method parse_method(std::string_view name) {
  for (Method m : kAllMethods)
    if (method_name(m) == name) return m;
  throw ValidationError("unknown method '" + std::string(name) + "'");
}

namespace {

double mean_information_cost(const CostModel& costs, const Eigen::VectorXd& se_sq) {
  if (costs.zero_precision_cost()) return costs.c_fixed();
  double sum = 0.0;
  for (Eigen::Index i = 0; i < se_sq.size(); ++i) sum += costs.precision_cost(se_sq(i));
  return costs.c_fixed() + sum / static_cast<double>(se_sq.size());
}

PayoffEstimate finish(Method method, double v_hat, double mu_hat, double info_cost,
                      const CostModel& costs) {
  PayoffEstimate e;
  e.method = method;
  e.v_hat = v_hat;
  e.mu_hat = mu_hat;
  e.information_cost = info_cost;
  const double excess = mu_hat - costs.c_launch();
  e.voe = v_hat - std::max(excess, 0.0) - info_cost;
  e.void_value = v_hat - excess - info_cost;
  return e;
}

// Studies in the canonical (se, tau_hat) order so nonparametric fits do not
// depend on input order.
std::vector<std::size_t> canonical_order(const StudySet& data) {
  std::vector<std::size_t> idx(data.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    const Study& x = data[a];
    const Study& y = data[b];
    if (x.se != y.se) return x.se < y.se;
    return x.tau_hat < y.tau_hat;
  });
  return idx;
}

struct GroupFit {
  std::vector<double> payoffs;  // max{E[tau | tau_hat] - c_L, 0} per study of the group
  BinDiagnostic diag;
  std::size_t fallbacks = 0;
};

GroupFit fit_group(const StudySet& data, const std::vector<std::size_t>& members,
                   double c_launch, const NpmleConfig& cfg) {
  std::vector<double> z(members.size());
  for (std::size_t k = 0; k < members.size(); ++k) {
    const Study& s = data[members[k]];
    z[k] = s.tau_hat / s.se;
  }
  const NpmleFit fit = fit_npmle(z, cfg);
  GroupFit g;
  g.payoffs.resize(members.size());
  for (std::size_t k = 0; k < members.size(); ++k) {
    const Study& s = data[members[k]];
    const ScaledPosteriorMean pm = posterior_mean_scaled(fit.distribution, z[k], s.se);
    if (pm.fallback) ++g.fallbacks;
    g.payoffs[k] = std::max(pm.value - c_launch, 0.0);
  }
  g.diag.se_lo = data[members.front()].se;
  g.diag.se_hi = data[members.back()].se;
  g.diag.count = members.size();
  g.diag.iterations = fit.report.iterations;
  g.diag.converged = fit.report.converged;
  g.diag.grid_widened = fit.report.grid_widened;
  g.diag.log_likelihood = fit.report.log_likelihood;
  return g;
}

// `data` must already be in canonical order.
PayoffEstimate nonparametric_from_groups(Method method, const StudySet& data,
                                         const std::vector<std::vector<std::size_t>>& groups,
                                         const CostModel& costs, const NpmleConfig& cfg) {
  Diagnostics diag;
  double sum = 0.0;
  for (const auto& members : groups) {
    GroupFit g = fit_group(data, members, costs.c_launch(), cfg);
    for (double p : g.payoffs) sum += p;
    diag.posterior_fallbacks += g.fallbacks;
    if (!g.diag.converged)
      diag.notes.push_back("NPMLE reached max_iter on a group of " + std::to_string(g.diag.count) +
                           " studies");
    diag.bins.push_back(g.diag);
  }
  const PriorMoments moments = estimate_prior_moments(data);
  diag.gamma_sq_clamped = moments.clamped;
  const double v_hat = sum / static_cast<double>(data.size());
  PayoffEstimate e = finish(method, v_hat, moments.mu_hat,
                            mean_information_cost(costs, data.variances()), costs);
  e.diagnostics = std::move(diag);
  return e;
}

}  // namespace

PayoffEstimate parametric_homoskedastic(const StudySet& data, const CostModel& costs) {
  const PriorMoments m = estimate_prior_moments(data);
  const double v_hat = expected_payoff(m.prior(), m.mean_se_sq, costs.c_launch());
  PayoffEstimate e = finish(Method::ParametricHom, v_hat, m.mu_hat,
                            costs.information_cost(m.mean_se_sq), costs);
  e.diagnostics.gamma_sq_clamped = m.clamped;
  if (m.clamped) e.diagnostics.notes.push_back("deconvolved gamma_sq clamped to floor");
  return e;
}

PayoffEstimate parametric_heteroskedastic(const StudySet& data, const CostModel& costs) {
  const PriorMoments m = estimate_prior_moments(data);
  const Eigen::VectorXd se_sq = data.variances();
  const double v_hat = mean_expected_payoff(m.prior(), se_sq, costs.c_launch());
  PayoffEstimate e =
      finish(Method::ParametricHet, v_hat, m.mu_hat, mean_information_cost(costs, se_sq), costs);
  e.diagnostics.gamma_sq_clamped = m.clamped;
  if (m.clamped) e.diagnostics.notes.push_back("deconvolved gamma_sq clamped to floor");
  return e;
}

PayoffEstimate nonparametric_homoskedastic(const StudySet& data, const CostModel& costs,
                                           const NpmleConfig& cfg) {
  const StudySet sorted = data.subset(canonical_order(data));
  std::vector<std::size_t> all(sorted.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  return nonparametric_from_groups(Method::NonparametricHom, sorted, {all}, costs, cfg);
}

PayoffEstimate nonparametric_heteroskedastic(const StudySet& data, const CostModel& costs,
                                             int n_bins, const NpmleConfig& cfg) {
  if (n_bins < 1) throw ValidationError("nonparametric_heteroskedastic: n_bins must be >= 1");
  const std::size_t n = data.size();
  const auto bins = static_cast<std::size_t>(n_bins);
  if (n < 2 * bins)
    throw ValidationError("nonparametric_heteroskedastic: need at least 2 studies per bin");

  const StudySet sorted = data.subset(canonical_order(data));

  // Cut points at the se quantiles; a study with se equal to a cut point goes
  // to the upper bin, so tied standard errors never straddle two bins.
  std::vector<double> cuts;
  for (std::size_t b = 1; b < bins; ++b) cuts.push_back(sorted[b * n / bins].se);
  std::vector<std::vector<std::size_t>> groups(bins);
  for (std::size_t idx = 0; idx < n; ++idx) {
    const double se = sorted[idx].se;
    std::size_t b = 0;
    while (b < cuts.size() && se >= cuts[b]) ++b;
    groups[b].push_back(idx);
  }

  std::vector<std::string> notes;
  std::erase_if(groups, [](const auto& g) { return g.empty(); });
  for (std::size_t b = 0; b < groups.size();) {
    if (groups[b].size() >= 2 || groups.size() == 1) {
      ++b;
      continue;
    }
    const std::size_t into = b + 1 < groups.size() ? b + 1 : b - 1;
    std::ostringstream msg;
    msg << "merged a bin of " << groups[b].size() << " studies into its neighbour";
    notes.push_back(msg.str());
    auto& target = groups[into];
    target.insert(into > b ? target.begin() : target.end(), groups[b].begin(), groups[b].end());
    groups.erase(groups.begin() + static_cast<std::ptrdiff_t>(b));
    if (into < b) b = into;
  }
  if (groups.size() < bins)
    notes.push_back("using " + std::to_string(groups.size()) + " of " + std::to_string(bins) +
                    " requested bins");

  PayoffEstimate e = nonparametric_from_groups(Method::NonparametricHet, sorted, groups, costs, cfg);
  e.diagnostics.notes.insert(e.diagnostics.notes.begin(), notes.begin(), notes.end());
  return e;
}

PayoffEstimate estimate(const StudySet& data, Method method, const EstimatorConfig& cfg) {
  switch (method) {
    case Method::ParametricHom: return parametric_homoskedastic(data, cfg.costs);
    case Method::ParametricHet: return parametric_heteroskedastic(data, cfg.costs);
    case Method::NonparametricHom: return nonparametric_homoskedastic(data, cfg.costs, cfg.npmle);
    case Method::NonparametricHet:
      return nonparametric_heteroskedastic(data, cfg.costs, cfg.n_bins, cfg.npmle);
  }
  throw ValidationError("estimate: unknown method");
}

double sorted_quantile(const std::vector<double>& sorted, double p) {
  if (sorted.empty()) throw ValidationError("sorted_quantile: no values");
  if (!(p >= 0.0 && p <= 1.0)) throw ValidationError("sorted_quantile: p must lie in [0, 1]");
  const double pos = p * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  if (frac == 0.0) return sorted[lo];
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

BootstrapResult bootstrap_interval(const StudySet& data, Method method,
                                   const EstimatorConfig& cfg, int replicates, double level,
                                   const RandomStream& stream) {
  if (replicates < 2) throw ValidationError("bootstrap_interval: need at least 2 replicates");
  if (!(level > 0.0 && level < 1.0)) throw ValidationError("bootstrap_interval: level must be in (0, 1)");

  const auto b_count = static_cast<std::size_t>(replicates);
  const std::size_t n = data.size();
  std::vector<std::optional<PayoffEstimate>> draws(b_count);
  parallel_for(b_count, [&](std::size_t b) {
    RandomStream rng = stream.substream(b);
    std::vector<std::size_t> idx(n);
    for (auto& i : idx) i = rng.below(n);
    try {
      draws[b] = estimate(data.subset(idx), method, cfg);
    } catch (const Error&) {
      draws[b].reset();
    }
  });

  std::vector<double> voe_vals, void_vals, v_vals;
  BootstrapResult r;
  r.replicates = replicates;
  for (const auto& d : draws) {
    if (!d) {
      ++r.failures;
      continue;
    }
    voe_vals.push_back(d->voe);
    void_vals.push_back(d->void_value);
    v_vals.push_back(d->v_hat);
  }
  if (static_cast<double>(r.failures) > 0.05 * static_cast<double>(replicates)) {
    throw NumericalError("bootstrap_interval: " + std::to_string(r.failures) + " of " +
                         std::to_string(replicates) + " replicates failed");
  }
  const double lo_p = (1.0 - level) / 2.0;
  const double hi_p = 1.0 - lo_p;
  auto interval = [&](std::vector<double>& v) {
    std::sort(v.begin(), v.end());
    return Interval{sorted_quantile(v, lo_p), sorted_quantile(v, hi_p), level};
  };
  r.voe = interval(voe_vals);
  r.void_value = interval(void_vals);
  r.v_hat = interval(v_vals);
  return r;
}

}  // namespace voe
