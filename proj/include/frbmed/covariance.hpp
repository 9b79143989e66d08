#pragma once

#include <optional>

#include "frbmed/robust.hpp"

namespace frbmed {

/// Location/scatter of the columns (X, M, Y), in that order.
struct CovarianceEstimate {
  Vector center;  // 3
  Matrix sigma;   // 3 x 3
  std::optional<Matrix> winsorized_data;  // n x 3
  /// Huber M-estimates that defined the winsorization ellipsoid.
  std::optional<Vector> huber_center;
  std::optional<Matrix> huber_scatter;
  double tuning_quantile = 0.95;
  /// Radius d0 of the winsorization ellipsoid (Mahalanobis units).
  double radius = 0.0;
  int iterations = 0;
};

/// Column means and the covariance with denominator n.
CovarianceEstimate ml_covariance(const Matrix& data);

/// Huber M-estimate of (mu, Sigma) with weights min(1, d0 / d_i), where d0^2
/// is the chi-square(3) quantile at tuning_quantile; the scatter update is
/// divided by the constant that makes it consistent at the normal. Points are
/// then pulled radially onto the d0 ellipsoid and sigma is the ML covariance
/// of the winsorized data (center likewise their mean).
CovarianceEstimate huber_winsorize(const Matrix& data, double tuning_quantile = 0.95);

/// Consistency constant E[min(chi2_p, r2)] / p of the Huber scatter update.
double huber_consistency_factor(double r2, int p);

struct SimpleMediationCoefficients {
  double a = 0.0;
  double b = 0.0;
  double c = 0.0;        // direct
  double c_total = 0.0;  // Sigma_XY / Sigma_XX
  double intercept_m = 0.0;
  double intercept_y = 0.0;
  double residual_var_m = 0.0;
  double residual_var_y = 0.0;
};

/// Regression coefficients of M ~ X and Y ~ M + X implied by the moments.
SimpleMediationCoefficients mediation_from_covariance(const CovarianceEstimate& est);

}  // namespace frbmed
