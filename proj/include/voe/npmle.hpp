#pragma once

// Nonparametric maximum likelihood for the mixing distribution G of
// standardized effects z_i ~ N(t_i, 1), t_i ~ G, with G restricted to a fixed
// grid of atoms and fitted by the EM fixed-point iteration on the simplex.

#include <Eigen/Dense>

#include <cstddef>
#include <span>
#include <vector>

namespace voe {

class Grid {
 public:
  explicit Grid(Eigen::VectorXd points);

  const Eigen::VectorXd& points() const noexcept { return points_; }
  Eigen::Index size() const noexcept { return points_.size(); }
  double front() const { return points_(0); }
  double back() const { return points_(points_.size() - 1); }

 private:
  Eigen::VectorXd points_;
};

/// m equally spaced atoms on [min(z) - pad, max(z) + pad]. All-equal data get
/// a symmetric interval of half-width max(pad, 1).
Grid make_grid(std::span<const double> z, Eigen::Index m, double pad);

class DiscreteDistribution {
 public:
  DiscreteDistribution(Grid grid, Eigen::VectorXd weights);

  const Grid& grid() const noexcept { return grid_; }
  const Eigen::VectorXd& atoms() const noexcept { return grid_.points(); }
  const Eigen::VectorXd& weights() const noexcept { return weights_; }

 private:
  Grid grid_;
  Eigen::VectorXd weights_;
};

struct FitReport {
  double log_likelihood = 0.0;
  int iterations = 0;
  bool converged = false;
  bool grid_widened = false;
  std::vector<double> likelihood_trace;
};

struct NpmleFit {
  DiscreteDistribution distribution;
  FitReport report;
};

struct NpmleConfig {
  Eigen::Index grid_size = 300;
  double pad = 1.0;
  /// Stop once one EM step raises the total log-likelihood by less than this.
  double tol = 1e-8;
  int max_iter = 10000;
};

/// Distance from a datum to its nearest atom beyond which the Gaussian kernel
/// underflows in double precision.
inline constexpr double kKernelReach = 37.5;

/// EM fixed point f_j <- f_j * mean_i[ phi(z_i - u_j) / sum_l phi(z_i - u_l) f_l ]
/// from uniform weights. If some datum lies beyond kernel reach of every atom
/// the grid is widened once to cover the data; if that still fails a
/// NumericalError is thrown.
NpmleFit fit_npmle(std::span<const double> z, const Grid& grid, double tol, int max_iter);

/// Convenience overload: builds the grid from `cfg` and fits.
NpmleFit fit_npmle(std::span<const double> z, const NpmleConfig& cfg);

/// Process-wide tally of completed fits and of fits whose likelihood trace
/// ever decreased.
struct FitAudit {
  std::size_t fits = 0;
  std::size_t non_monotone = 0;
};

FitAudit fit_audit() noexcept;

/// sum_i log sum_j phi(z_i - u_j) f_j.
double log_likelihood(const DiscreteDistribution& dist, std::span<const double> z);

struct ScaledPosteriorMean {
  double value = 0.0;
  bool fallback = false;
};

/// sigma * E_G[t | z]: the plug-in posterior mean of tau for a study with
/// standardized estimate z and standard error sigma.
ScaledPosteriorMean posterior_mean_scaled(const DiscreteDistribution& dist, double z,
                                          double sigma);

}  // namespace voe
