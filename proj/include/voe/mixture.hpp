#pragma once

// Posterior mean and payoff when tau follows a finite Gaussian mixture.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include "voe/errors.hpp"
#include "voe/gaussian.hpp"
#include "voe/parallel.hpp"
#include "voe/random.hpp"

namespace voe {

template <typename Scalar>
struct MixtureComponent {
  Scalar weight{};
  Scalar mu{};
  Scalar gamma_sq{};
};

template <typename Scalar>
class GaussianMixturePrior {
 public:
  explicit GaussianMixturePrior(std::vector<MixtureComponent<Scalar>> components)
      : components_(std::move(components)) {
    if (components_.empty()) throw ValidationError("GaussianMixturePrior: need k >= 1");
    Scalar total = 0;
    for (const auto& c : components_) {
      if (!(c.weight >= Scalar(0)) || c.weight > Scalar(1))
        throw ValidationError("GaussianMixturePrior: weights must lie in [0, 1]");
      if (!(c.gamma_sq >= Scalar(0)))
        throw ValidationError("GaussianMixturePrior: gamma_sq must be >= 0");
      total += c.weight;
    }
    using std::abs;
    if (abs(total - Scalar(1)) > Scalar(1e-12))
      throw ValidationError("GaussianMixturePrior: weights must sum to 1");
  }

  /// Single-component mixture.
  explicit GaussianMixturePrior(const GaussianPrior<Scalar>& prior)
      : GaussianMixturePrior({{Scalar(1), prior.mu, prior.gamma_sq}}) {}

  const std::vector<MixtureComponent<Scalar>>& components() const noexcept { return components_; }
  std::size_t size() const noexcept { return components_.size(); }

  Scalar mean() const {
    Scalar m = 0;
    for (const auto& c : components_) m += c.weight * c.mu;
    return m;
  }

 private:
  std::vector<MixtureComponent<Scalar>> components_;
};

using GaussianMixturePriord = GaussianMixturePrior<double>;

template <typename Scalar>
struct MixturePosteriorMean {
  Scalar value{};
  /// Set when every responsibility was degenerate and the nearest component
  /// was used instead.
  bool fallback = false;
};

/// E[tau | tau_hat] under a Gaussian mixture prior: component posterior means
/// weighted by p_j times the component marginal density of tau_hat.
/// Responsibilities are formed in log space with max subtraction.
template <typename Scalar>
MixturePosteriorMean<Scalar> mixture_posterior_mean(const GaussianMixturePrior<Scalar>& prior,
                                                    const Signal<Scalar>& signal) {
  using std::exp;
  using std::isfinite;
  using std::log;
  using std::sqrt;
  const auto& comps = prior.components();
  const std::size_t k = comps.size();
  const Scalar neg_inf = -std::numeric_limits<Scalar>::infinity();

  if (k == 1) {
    const auto& c = comps.front();
    return {posterior_params(GaussianPrior<Scalar>(c.mu, c.gamma_sq), signal).mean, false};
  }

  std::vector<Scalar> log_resp(k, neg_inf);
  std::vector<Scalar> means(k);
  Scalar max_log = neg_inf;
  for (std::size_t j = 0; j < k; ++j) {
    const auto& c = comps[j];
    const Scalar total = c.gamma_sq + signal.sigma_sq;
    if (total == Scalar(0))
      throw ValidationError("mixture_posterior_mean: exact signal with a point-mass component");
    means[j] = posterior_params(GaussianPrior<Scalar>(c.mu, c.gamma_sq), signal).mean;
    if (c.weight == Scalar(0)) continue;
    const Scalar sd = sqrt(total);
    log_resp[j] = log(c.weight) - log(sd) + normal_log_pdf((signal.tau_hat - c.mu) / sd);
    max_log = std::max(max_log, log_resp[j]);
  }

  if (!isfinite(max_log)) {
    std::size_t nearest = 0;
    Scalar best = std::numeric_limits<Scalar>::infinity();
    for (std::size_t j = 0; j < k; ++j) {
      const Scalar d = std::abs(signal.tau_hat - comps[j].mu) /
                       sqrt(comps[j].gamma_sq + signal.sigma_sq);
      if (comps[j].weight > Scalar(0) && d < best) {
        best = d;
        nearest = j;
      }
    }
    return {means[nearest], true};
  }

  Scalar num = 0;
  Scalar den = 0;
  for (std::size_t j = 0; j < k; ++j) {
    if (log_resp[j] == neg_inf) continue;
    const Scalar w = exp(log_resp[j] - max_log);
    num += w * means[j];
    den += w;
  }
  return {num / den, false};
}

struct MonteCarloEstimate {
  double mean = 0.0;
  double standard_error = 0.0;
  std::size_t draws = 0;
};

inline constexpr std::size_t kDefaultTruthDraws = 500000;

/// Draws tau from the mixture and tau_hat = tau + sigma u, then averages
/// max{E[tau | tau_hat] - c_L, 0}. Draw i always uses the same counters of
/// `stream`, so the result does not depend on how draws are split.
inline MonteCarloEstimate mixture_expected_payoff_mc(const GaussianMixturePriord& prior,
                                                     double sigma_sq, double c_launch,
                                                     std::size_t n_draws,
                                                     const RandomStream& stream) {
  if (n_draws < 1) throw ValidationError("mixture_expected_payoff_mc: n_draws must be >= 1");
  if (!(sigma_sq >= 0.0)) throw ValidationError("mixture_expected_payoff_mc: sigma_sq must be >= 0");
  const double sigma = std::sqrt(sigma_sq);
  const auto& comps = prior.components();

  constexpr std::size_t kBlock = 8192;
  const std::size_t blocks = (n_draws + kBlock - 1) / kBlock;
  std::vector<double> block_sum(blocks, 0.0);
  std::vector<double> block_sq(blocks, 0.0);

  parallel_for(blocks, [&](std::size_t b) {
    const std::size_t begin = b * kBlock;
    const std::size_t end = std::min(n_draws, begin + kBlock);
    RandomStream rng = stream;
    double sum = 0.0;
    double sq = 0.0;
    for (std::size_t i = begin; i < end; ++i) {
      rng.seek(5 * static_cast<std::uint64_t>(i));  // 1 uniform + 2 normals per draw
      const double pick = rng.uniform();
      std::size_t j = 0;
      double acc = comps[0].weight;
      while (pick >= acc && j + 1 < comps.size()) acc += comps[++j].weight;
      const double tau = comps[j].mu + std::sqrt(comps[j].gamma_sq) * rng.normal();
      const double tau_hat = tau + sigma * rng.normal();
      const double post = mixture_posterior_mean(prior, Signald(tau_hat, sigma_sq)).value;
      const double payoff = std::max(post - c_launch, 0.0);
      sum += payoff;
      sq += payoff * payoff;
    }
    block_sum[b] = sum;
    block_sq[b] = sq;
  });

  double sum = 0.0;
  double sq = 0.0;
  for (std::size_t b = 0; b < blocks; ++b) {
    sum += block_sum[b];
    sq += block_sq[b];
  }
  const double n = static_cast<double>(n_draws);
  const double mean = sum / n;
  const double var = n > 1 ? std::max(0.0, (sq - n * mean * mean) / (n - 1)) : 0.0;
  return {mean, std::sqrt(var / n), n_draws};
}

}  // namespace voe
