#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <string>
#include <vector>

namespace voe {

/// One evaluation: a point estimate and its standard error.
struct Study {
  std::string id;
  double tau_hat = 0.0;
  double se = 1.0;
};

/// A validated collection of at least two studies.
class StudySet {
 public:
  explicit StudySet(std::vector<Study> studies);

  std::size_t size() const noexcept { return studies_.size(); }
  const std::vector<Study>& studies() const noexcept { return studies_; }
  const Study& operator[](std::size_t i) const { return studies_[i]; }

  Eigen::VectorXd tau_hats() const;
  Eigen::VectorXd standard_errors() const;
  Eigen::VectorXd variances() const;

  /// Studies at the given indices; used by resampling.
  StudySet subset(const std::vector<std::size_t>& indices) const;

 private:
  std::vector<Study> studies_;
};

}  // namespace voe
