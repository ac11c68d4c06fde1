#pragma once

#include <cmath>
#include <numbers>

namespace voe {

// Standard Gaussian density and distribution function. Both go through the
// complementary error function so the lower tail keeps full relative accuracy.

template <typename Scalar>
inline Scalar normal_pdf(Scalar z) {
  using std::exp;
  const Scalar inv_sqrt_2pi = std::numbers::inv_sqrtpi_v<Scalar> / std::numbers::sqrt2_v<Scalar>;
  return inv_sqrt_2pi * exp(Scalar(-0.5) * z * z);
}

template <typename Scalar>
inline Scalar normal_log_pdf(Scalar z) {
  using std::log;
  const Scalar log_sqrt_2pi =
      Scalar(0.5) * log(Scalar(2) * std::numbers::pi_v<Scalar>);
  return Scalar(-0.5) * z * z - log_sqrt_2pi;
}

template <typename Scalar>
inline Scalar normal_cdf(Scalar z) {
  using std::erfc;
  return Scalar(0.5) * erfc(-z / std::numbers::sqrt2_v<Scalar>);
}

}  // namespace voe
