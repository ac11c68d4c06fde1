#include "voe/gaussian.hpp"

#include <string>

namespace voe {

CostModel::CostModel(double c_launch, double c_fixed, std::vector<Knot> precision_cost)
    : c_launch_(c_launch), c_fixed_(c_fixed), table_(std::move(precision_cost)) {
  if (!std::isfinite(c_launch_)) throw ValidationError("CostModel: c_launch must be finite");
  if (!(c_fixed_ >= 0.0) || !std::isfinite(c_fixed_))
    throw ValidationError("CostModel: c_fixed must be finite and >= 0");
  std::sort(table_.begin(), table_.end(),
            [](const Knot& a, const Knot& b) { return a.sigma_sq < b.sigma_sq; });
  for (std::size_t i = 0; i < table_.size(); ++i) {
    const Knot& k = table_[i];
    if (!(k.sigma_sq >= 0.0) || !std::isfinite(k.sigma_sq))
      throw ValidationError("CostModel: precision cost knots need finite sigma_sq >= 0");
    if (!(k.cost >= 0.0) || !std::isfinite(k.cost))
      throw ValidationError("CostModel: precision cost values must be finite and >= 0");
    if (i > 0) {
      if (k.sigma_sq == table_[i - 1].sigma_sq)
        throw ValidationError("CostModel: duplicate sigma_sq knot " + std::to_string(k.sigma_sq));
      if (k.cost > table_[i - 1].cost)
        throw ValidationError("CostModel: precision cost must be non-increasing in sigma_sq");
    }
  }
}

double CostModel::precision_cost(double sigma_sq) const {
  if (table_.empty()) return 0.0;
  if (sigma_sq < table_.front().sigma_sq || sigma_sq > table_.back().sigma_sq)
    throw ValidationError("CostModel: sigma_sq " + std::to_string(sigma_sq) +
                          " outside the precision cost table [" +
                          std::to_string(table_.front().sigma_sq) + ", " +
                          std::to_string(table_.back().sigma_sq) + "]");
  if (table_.size() == 1) return table_.front().cost;
  auto hi = std::upper_bound(table_.begin(), table_.end(), sigma_sq,
                             [](double s, const Knot& k) { return s < k.sigma_sq; });
  if (hi == table_.end()) return table_.back().cost;
  auto lo = hi - 1;
  const double t = (sigma_sq - lo->sigma_sq) / (hi->sigma_sq - lo->sigma_sq);
  return lo->cost + t * (hi->cost - lo->cost);
}

double voe(const GaussianPriord& prior, double sigma_sq, const CostModel& costs) {
  const double cost = costs.information_cost(sigma_sq);
  return expected_payoff(prior, sigma_sq, costs.c_launch()) -
         payoff_no_info(prior, costs.c_launch()) - cost;
}

double void_value(const GaussianPriord& prior, double sigma_sq, const CostModel& costs) {
  const double cost = costs.information_cost(sigma_sq);
  return expected_payoff(prior, sigma_sq, costs.c_launch()) - (prior.mu - costs.c_launch()) -
         cost;
}

namespace {

void check_design(const DesignSpec& d) {
  if (d.n0 < 1 || d.n1 < 1) throw ValidationError("DesignSpec: arm sizes must be >= 1");
  if (!(d.var0 >= 0.0) || !(d.var1 >= 0.0))
    throw ValidationError("DesignSpec: arm variances must be >= 0");
}

}  // namespace

double diff_in_means_variance(const DesignSpec& design) {
  check_design(design);
  return design.var1 / static_cast<double>(design.n1) +
         design.var0 / static_cast<double>(design.n0);
}

double lift_variance(const DesignSpec& design, double tau_lift, LiftVariance mode) {
  check_design(design);
  if (design.theta0 == 0.0) throw ValidationError("lift_variance: theta0 must be non-zero");
  const double control_factor =
      mode == LiftVariance::Exact ? (1.0 + tau_lift) * (1.0 + tau_lift) : 1.0;
  const double n1 = static_cast<double>(design.n1);
  const double n0 = static_cast<double>(design.n0);
  return (design.var1 / n1 + control_factor * design.var0 / n0) /
         (design.theta0 * design.theta0);
}

}  // namespace voe
