#include "voe/npmle.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <sstream>

#include "voe/errors.hpp"
#include "voe/normal.hpp"

namespace voe {

Grid::Grid(Eigen::VectorXd points) : points_(std::move(points)) {
  if (points_.size() < 2) throw ValidationError("Grid: need at least 2 points");
  for (Eigen::Index j = 0; j < points_.size(); ++j) {
    if (!std::isfinite(points_(j))) throw ValidationError("Grid: points must be finite");
    if (j > 0 && !(points_(j) > points_(j - 1)))
      throw ValidationError("Grid: points must be strictly increasing");
  }
}

Grid make_grid(std::span<const double> z, Eigen::Index m, double pad) {
  if (z.empty()) throw ValidationError("make_grid: z must be non-empty");
  if (m < 2) throw ValidationError("make_grid: m must be >= 2");
  if (!(pad >= 0.0)) throw ValidationError("make_grid: pad must be >= 0");
  const auto [lo_it, hi_it] = std::minmax_element(z.begin(), z.end());
  double lo = *lo_it - pad;
  double hi = *hi_it + pad;
  if (!(hi > lo)) {
    const double half = std::max(pad, 1.0);
    lo = *lo_it - half;
    hi = *lo_it + half;
  }
  return Grid(Eigen::VectorXd::LinSpaced(m, lo, hi));
}

DiscreteDistribution::DiscreteDistribution(Grid grid, Eigen::VectorXd weights)
    : grid_(std::move(grid)), weights_(std::move(weights)) {
  if (weights_.size() != grid_.size())
    throw ValidationError("DiscreteDistribution: one weight per atom required");
  if ((weights_.array() < 0.0).any() || (weights_.array() > 1.0).any())
    throw ValidationError("DiscreteDistribution: weights must lie in [0, 1]");
  if (std::abs(weights_.sum() - 1.0) > 1e-10)
    throw ValidationError("DiscreteDistribution: weights must sum to 1");
}

namespace {

// Row-scaled kernel K_ij = phi(z_i - u_j) / max_l phi(z_i - u_l) and the
// per-row log scale, so that log sum_j phi(z_i - u_j) f_j = offset_i + log(K f)_i.
struct ScaledKernel {
  Eigen::MatrixXd kernel;
  Eigen::VectorXd log_offset;
  double worst_reach = 0.0;
  Eigen::Index worst_index = 0;
};

ScaledKernel build_kernel(std::span<const double> z, const Eigen::VectorXd& atoms) {
  const auto n = static_cast<Eigen::Index>(z.size());
  const Eigen::Index m = atoms.size();
  ScaledKernel k;
  k.kernel.resize(n, m);
  k.log_offset.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double zi = z[static_cast<std::size_t>(i)];
    double nearest = std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < m; ++j) nearest = std::min(nearest, std::abs(zi - atoms(j)));
    if (nearest > k.worst_reach || !std::isfinite(nearest)) {
      k.worst_reach = std::isfinite(nearest) ? nearest : std::numeric_limits<double>::infinity();
      k.worst_index = i;
    }
    const double offset = normal_log_pdf(nearest);
    k.log_offset(i) = offset;
    for (Eigen::Index j = 0; j < m; ++j)
      k.kernel(i, j) = std::exp(normal_log_pdf(zi - atoms(j)) - offset);
  }
  return k;
}

double kernel_log_likelihood(const ScaledKernel& k, const Eigen::VectorXd& marginal) {
  return k.log_offset.sum() + marginal.array().log().sum();
}

void check_data(std::span<const double> z) {
  if (z.empty()) throw ValidationError("fit_npmle: z must be non-empty");
  for (double v : z)
    if (!std::isfinite(v)) throw DataError("fit_npmle: z contains a non-finite value");
}

std::atomic<std::size_t> g_fits{0};
std::atomic<std::size_t> g_non_monotone{0};

}  // namespace

FitAudit fit_audit() noexcept { return {g_fits.load(), g_non_monotone.load()}; }

NpmleFit fit_npmle(std::span<const double> z, const Grid& grid_in, double tol, int max_iter) {
  check_data(z);
  if (!(tol > 0.0)) throw ValidationError("fit_npmle: tol must be > 0");
  if (max_iter < 1) throw ValidationError("fit_npmle: max_iter must be >= 1");

  Grid grid = grid_in;
  ScaledKernel k = build_kernel(z, grid.points());
  bool widened = false;
  if (k.worst_reach > kKernelReach) {
    const auto [lo_it, hi_it] = std::minmax_element(z.begin(), z.end());
    const double lo = std::min(grid.front(), *lo_it - 1.0);
    const double hi = std::max(grid.back(), *hi_it + 1.0);
    grid = Grid(Eigen::VectorXd::LinSpaced(grid.size(), lo, hi));
    k = build_kernel(z, grid.points());
    widened = true;
    if (k.worst_reach > kKernelReach) {
      std::ostringstream msg;
      msg << "fit_npmle: observation " << k.worst_index << " (z = "
          << z[static_cast<std::size_t>(k.worst_index)] << ") is " << k.worst_reach
          << " from the nearest atom even after widening the grid to [" << lo << ", " << hi
          << "] with " << grid.size() << " atoms";
      throw NumericalError(msg.str());
    }
  }

  const Eigen::Index m = grid.size();
  const double inv_n = 1.0 / static_cast<double>(z.size());
  Eigen::VectorXd f = Eigen::VectorXd::Constant(m, 1.0 / static_cast<double>(m));
  Eigen::VectorXd marginal = k.kernel * f;

  FitReport report;
  report.grid_widened = widened;
  double ll = kernel_log_likelihood(k, marginal);
  report.likelihood_trace.push_back(ll);

  Eigen::VectorXd next(m);
  Eigen::VectorXd next_marginal;
  for (int it = 0; it < max_iter; ++it) {
    next.noalias() = k.kernel.transpose() * marginal.cwiseInverse();
    next = f.cwiseProduct(next) * inv_n;
    next /= next.sum();
    next_marginal.noalias() = k.kernel * next;
    const double next_ll = kernel_log_likelihood(k, next_marginal);
    report.iterations = it + 1;
    if (!(next_ll >= ll)) {
      // Rounding-level decrease: the previous iterate is already a fixed point.
      report.converged = true;
      break;
    }
    const double gain = next_ll - ll;
    f.swap(next);
    marginal.swap(next_marginal);
    ll = next_ll;
    report.likelihood_trace.push_back(ll);
    if (gain < tol) {
      report.converged = true;
      break;
    }
  }
  report.log_likelihood = ll;
  g_fits.fetch_add(1);
  if (!std::is_sorted(report.likelihood_trace.begin(), report.likelihood_trace.end()))
    g_non_monotone.fetch_add(1);
  return {DiscreteDistribution(std::move(grid), std::move(f)), std::move(report)};
}

NpmleFit fit_npmle(std::span<const double> z, const NpmleConfig& cfg) {
  return fit_npmle(z, make_grid(z, cfg.grid_size, cfg.pad), cfg.tol, cfg.max_iter);
}

double log_likelihood(const DiscreteDistribution& dist, std::span<const double> z) {
  check_data(z);
  const ScaledKernel k = build_kernel(z, dist.atoms());
  const Eigen::VectorXd marginal = k.kernel * dist.weights();
  return kernel_log_likelihood(k, marginal);
}

ScaledPosteriorMean posterior_mean_scaled(const DiscreteDistribution& dist, double z,
                                          double sigma) {
  if (!(sigma > 0.0)) throw ValidationError("posterior_mean_scaled: sigma must be > 0");
  const Eigen::VectorXd& u = dist.atoms();
  const Eigen::VectorXd& f = dist.weights();
  const Eigen::Index m = u.size();
  double max_log = -std::numeric_limits<double>::infinity();
  for (Eigen::Index j = 0; j < m; ++j)
    if (f(j) > 0.0) max_log = std::max(max_log, std::log(f(j)) + normal_log_pdf(z - u(j)));

  if (!std::isfinite(max_log)) {
    Eigen::Index nearest = 0;
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < m; ++j) {
      const double d = std::abs(z - u(j));
      if (f(j) > 0.0 && d < best) {
        best = d;
        nearest = j;
      }
    }
    return {sigma * u(nearest), true};
  }

  double num = 0.0;
  double den = 0.0;
  for (Eigen::Index j = 0; j < m; ++j) {
    if (f(j) <= 0.0) continue;
    const double w = std::exp(std::log(f(j)) + normal_log_pdf(z - u(j)) - max_log);
    num += w * u(j);
    den += w;
  }
  return {sigma * (num / den), false};
}

}  // namespace voe
