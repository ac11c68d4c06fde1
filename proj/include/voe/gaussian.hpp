#pragma once

// Closed-form payoff mathematics for a Gaussian prior on the latent effect and
// a Gaussian signal around it.
//
// With tau ~ N(mu, gamma_sq) and tau_hat | tau ~ N(tau, sigma_sq), the
// posterior mean shifted by the launch cost is itself Gaussian,
//
//   Z ~ N(mu - c_L, gamma_sq^2 / (gamma_sq + sigma_sq)),
//
// and the expected payoff of launching only when Z > 0 is the censored first
// moment E[max{Z, 0}]. Everything in this header is a pure function of its
// arguments and is templated on the scalar type so the same code can be
// evaluated in extended precision.

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

#include "voe/errors.hpp"
#include "voe/normal.hpp"

namespace voe {

template <typename Scalar>
struct GaussianPrior {
  Scalar mu{};
  Scalar gamma_sq{};

  GaussianPrior() = default;
  GaussianPrior(Scalar mean, Scalar variance) : mu(mean), gamma_sq(variance) {
    if (!(gamma_sq >= Scalar(0))) throw ValidationError("GaussianPrior: gamma_sq must be >= 0");
  }
};

template <typename Scalar>
struct Signal {
  Scalar tau_hat{};
  Scalar sigma_sq{};

  Signal() = default;
  Signal(Scalar estimate, Scalar variance) : tau_hat(estimate), sigma_sq(variance) {
    if (!(sigma_sq >= Scalar(0))) throw ValidationError("Signal: sigma_sq must be >= 0");
  }
};

template <typename Scalar>
struct PosteriorParams {
  Scalar mean{};
  Scalar variance{};
};

using GaussianPriord = GaussianPrior<double>;
using Signald = Signal<double>;
using PosteriorParamsd = PosteriorParams<double>;

/// |standardized censoring point| beyond which the payoff is evaluated by its
/// limit instead of the closed form.
inline constexpr double kPayoffOverflowZ = 38.0;

/// Posterior of tau given one signal. Degenerate variances are resolved by
/// their continuous limits: an exact signal returns (tau_hat, 0), a point-mass
/// prior returns (mu, 0).
template <typename Scalar>
PosteriorParams<Scalar> posterior_params(const GaussianPrior<Scalar>& prior,
                                         const Signal<Scalar>& signal) {
  const Scalar g = prior.gamma_sq;
  const Scalar s = signal.sigma_sq;
  if (g == Scalar(0) && s == Scalar(0)) {
    if (prior.mu != signal.tau_hat)
      throw ValidationError("posterior_params: point-mass prior contradicts exact signal");
    return {prior.mu, Scalar(0)};
  }
  if (s == Scalar(0)) return {signal.tau_hat, Scalar(0)};
  if (g == Scalar(0)) return {prior.mu, Scalar(0)};
  const Scalar precision = Scalar(1) / g + Scalar(1) / s;
  return {(prior.mu / g + signal.tau_hat / s) / precision, Scalar(1) / precision};
}

/// V(infinity): the payoff of deciding on the prior mean alone.
template <typename Scalar>
Scalar payoff_no_info(const GaussianPrior<Scalar>& prior, Scalar c_launch) {
  return std::max(prior.mu - c_launch, Scalar(0));
}

namespace detail {

// Standardized censoring point (mu - c_L) sqrt(gamma_sq + sigma_sq) / gamma_sq
// and the posterior-mean standard deviation gamma_sq / sqrt(gamma_sq + sigma_sq).
template <typename Scalar>
std::pair<Scalar, Scalar> censoring_point(Scalar excess, Scalar gamma_sq, Scalar sigma_sq) {
  using std::sqrt;
  if (sigma_sq == Scalar(0)) {
    const Scalar gamma = sqrt(gamma_sq);
    return {excess / gamma, gamma};
  }
  const Scalar root = sqrt(gamma_sq + sigma_sq);
  return {excess * root / gamma_sq, gamma_sq / root};
}

}  // namespace detail

/// V(sigma_sq): expected payoff when the launch decision uses a signal of
/// variance sigma_sq. Total on sigma_sq >= 0, including +inf.
template <typename Scalar>
Scalar expected_payoff(const GaussianPrior<Scalar>& prior, Scalar sigma_sq, Scalar c_launch) {
  using std::isinf;
  if (!(sigma_sq >= Scalar(0))) throw ValidationError("expected_payoff: sigma_sq must be >= 0");
  const Scalar excess = prior.mu - c_launch;
  if (prior.gamma_sq == Scalar(0) || isinf(sigma_sq)) return payoff_no_info(prior, c_launch);
  const auto [z, scale] = detail::censoring_point(excess, prior.gamma_sq, sigma_sq);
  if (z > Scalar(kPayoffOverflowZ)) return excess;
  if (z < Scalar(-kPayoffOverflowZ)) return Scalar(0);
  // Equivalently max(excess, 0) + scale * (phi(|z|) - |z| Phi(-|z|)), whose
  // second term is non-negative.
  using std::abs;
  const Scalar t = abs(z);
  const Scalar tail = std::max(normal_pdf(t) - t * normal_cdf(-t), Scalar(0));
  return std::max(excess, Scalar(0)) + scale * tail;
}

/// Average of V over a vector of sampling variances: the payoff when the
/// variance itself varies across evaluations independently of tau.
template <typename Derived>
typename Derived::Scalar mean_expected_payoff(
    const GaussianPrior<typename Derived::Scalar>& prior,
    const Eigen::MatrixBase<Derived>& sigma_sq, typename Derived::Scalar c_launch) {
  using Scalar = typename Derived::Scalar;
  if (sigma_sq.size() == 0) throw ValidationError("mean_expected_payoff: no variances");
  Scalar sum = 0;
  for (Eigen::Index i = 0; i < sigma_sq.size(); ++i)
    sum += expected_payoff(prior, sigma_sq(i), c_launch);
  return sum / static_cast<Scalar>(sigma_sq.size());
}

/// dV / d sigma_sq. Never positive.
template <typename Scalar>
Scalar dV_dsigma_sq(const GaussianPrior<Scalar>& prior, Scalar sigma_sq, Scalar c_launch) {
  using std::pow;
  if (!(prior.gamma_sq > Scalar(0))) throw ValidationError("dV_dsigma_sq: gamma_sq must be > 0");
  const Scalar total = prior.gamma_sq + sigma_sq;
  const auto [z, scale] = detail::censoring_point(prior.mu - c_launch, prior.gamma_sq, sigma_sq);
  return -prior.gamma_sq / (Scalar(2) * pow(total, Scalar(1.5))) * normal_pdf(z);
}

/// dV / d gamma_sq. Never negative.
template <typename Scalar>
Scalar dV_dgamma_sq(const GaussianPrior<Scalar>& prior, Scalar sigma_sq, Scalar c_launch) {
  using std::pow;
  if (!(prior.gamma_sq > Scalar(0))) throw ValidationError("dV_dgamma_sq: gamma_sq must be > 0");
  const Scalar total = prior.gamma_sq + sigma_sq;
  const auto [z, scale] = detail::censoring_point(prior.mu - c_launch, prior.gamma_sq, sigma_sq);
  return (prior.gamma_sq + Scalar(2) * sigma_sq) / (Scalar(2) * pow(total, Scalar(1.5))) *
         normal_pdf(z);
}

/// d^2 V / d sigma_sq^2. Never negative: V is convex in sigma_sq.
template <typename Scalar>
Scalar d2V_dsigma_sq2(const GaussianPrior<Scalar>& prior, Scalar sigma_sq, Scalar c_launch) {
  using std::pow;
  if (!(prior.gamma_sq > Scalar(0))) throw ValidationError("d2V_dsigma_sq2: gamma_sq must be > 0");
  const Scalar g = prior.gamma_sq;
  const Scalar excess = prior.mu - c_launch;
  const Scalar total = g + sigma_sq;
  const auto [z, scale] = detail::censoring_point(excess, g, sigma_sq);
  return (Scalar(3) * g * g + excess * excess * total) /
         (Scalar(4) * g * pow(total, Scalar(2.5))) * normal_pdf(z);
}

/// Launch, fixed, and precision costs of acquiring a signal.
///
/// The precision cost c(sigma_sq) is a table of (sigma_sq, cost) knots with
/// linear interpolation in between. An empty table means c is identically 0.
class CostModel {
 public:
  struct Knot {
    double sigma_sq;
    double cost;
  };

  CostModel() = default;
  CostModel(double c_launch, double c_fixed, std::vector<Knot> precision_cost = {});

  double c_launch() const noexcept { return c_launch_; }
  double c_fixed() const noexcept { return c_fixed_; }
  const std::vector<Knot>& precision_table() const noexcept { return table_; }
  bool zero_precision_cost() const noexcept { return table_.empty(); }

  /// c(sigma_sq). Throws ValidationError outside the tabulated domain.
  double precision_cost(double sigma_sq) const;

  /// c_F + c(sigma_sq).
  double information_cost(double sigma_sq) const { return c_fixed_ + precision_cost(sigma_sq); }

 private:
  double c_launch_ = 0.0;
  double c_fixed_ = 0.0;
  std::vector<Knot> table_;
};

/// Value of evidence-based decisions relative to deciding on the prior.
double voe(const GaussianPriord& prior, double sigma_sq, const CostModel& costs);

/// Value of evidence-based decisions relative to always launching.
double void_value(const GaussianPriord& prior, double sigma_sq, const CostModel& costs);

// Experiment-design variance helpers for a two-arm randomized comparison.

struct DesignSpec {
  double theta0 = 0.0;
  double theta1 = 0.0;
  double var0 = 0.0;
  double var1 = 0.0;
  long n0 = 1;
  long n1 = 1;
};

enum class LiftVariance { Exact, SmallLift };

/// Sampling variance of the difference in arm means.
double diff_in_means_variance(const DesignSpec& design);

/// Sampling variance of the relative lift (theta1 - theta0) / theta0.
double lift_variance(const DesignSpec& design, double tau_lift, LiftVariance mode);

}  // namespace voe
