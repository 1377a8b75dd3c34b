// Copyright 2026 The prepivot Authors.
// SPDX-License-Identifier: Apache-2.0
#include "prepivot/distributions.hpp"

#include <cmath>
#include <numbers>

#include <boost/math/special_functions/gamma.hpp>

#include "prepivot/error.hpp"

namespace prepivot {

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double normal_two_sided_upper(double z) { return std::erfc(std::fabs(z) / std::numbers::sqrt2); }

double chi_square_cdf(double x, double dof) {
  require(dof > 0, ErrorKind::invalid_argument, "chi-square degrees of freedom must be positive");
  if (!(x > 0)) return 0.0;
  if (std::isinf(x)) return 1.0;
  return boost::math::gamma_p(dof / 2, x / 2);
}

double chi_square_upper(double x, double dof) {
  require(dof > 0, ErrorKind::invalid_argument, "chi-square degrees of freedom must be positive");
  if (!(x > 0)) return 1.0;
  if (std::isinf(x)) return 0.0;
  return boost::math::gamma_q(dof / 2, x / 2);
}

}  // namespace prepivot
