#include "voe/studies.hpp"

#include <cmath>

#include "voe/errors.hpp"

namespace voe {

StudySet::StudySet(std::vector<Study> studies) : studies_(std::move(studies)) {
  if (studies_.size() < 2) throw DataError("StudySet: need at least 2 studies");
  for (const Study& s : studies_) {
    if (!std::isfinite(s.tau_hat))
      throw DataError("StudySet: study '" + s.id + "' has a non-finite estimate");
    if (!(s.se > 0.0) || !std::isfinite(s.se))
      throw DataError("StudySet: study '" + s.id + "' needs a finite standard error > 0");
  }
}

Eigen::VectorXd StudySet::tau_hats() const {
  Eigen::VectorXd v(static_cast<Eigen::Index>(studies_.size()));
  for (std::size_t i = 0; i < studies_.size(); ++i) v(static_cast<Eigen::Index>(i)) = studies_[i].tau_hat;
  return v;
}

Eigen::VectorXd StudySet::standard_errors() const {
  Eigen::VectorXd v(static_cast<Eigen::Index>(studies_.size()));
  for (std::size_t i = 0; i < studies_.size(); ++i) v(static_cast<Eigen::Index>(i)) = studies_[i].se;
  return v;
}

Eigen::VectorXd StudySet::variances() const { return standard_errors().array().square(); }

StudySet StudySet::subset(const std::vector<std::size_t>& indices) const {
  std::vector<Study> out;
  out.reserve(indices.size());
  for (std::size_t i : indices) out.push_back(studies_.at(i));
  return StudySet(std::move(out));
}

}  // namespace voe
