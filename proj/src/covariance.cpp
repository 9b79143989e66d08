#include "frbmed/covariance.hpp"

#include <cmath>

#include "frbmed/distributions.hpp"
#include "frbmed/error.hpp"

namespace frbmed {

CovarianceEstimate ml_covariance(const Matrix& data) {
  if (data.cols() != 3) fail(ErrorKind::InvalidArgument, "ml_covariance expects columns (X, M, Y)");
  if (data.rows() < 4) {
    fail(ErrorKind::TooFewRows, "TooFewRows: covariance estimation needs n >= 4");
  }
  CovarianceEstimate est;
  est.center = data.colwise().mean().transpose();
  const Matrix centered = data.rowwise() - est.center.transpose();
  est.sigma = centered.transpose() * centered / static_cast<double>(data.rows());
  est.sigma = 0.5 * (est.sigma + est.sigma.transpose());
  return est;
}

double huber_consistency_factor(double r2, int p) {
  const double dp = static_cast<double>(p);
  // E[chi2_p 1{chi2_p <= r2}] = p P(chi2_{p+2} <= r2)
  return (dp * chi_squared_cdf(r2, dp + 2.0) + r2 * (1.0 - chi_squared_cdf(r2, dp))) / dp;
}

CovarianceEstimate huber_winsorize(const Matrix& data, double tuning_quantile) {
  if (!(tuning_quantile > 0.0 && tuning_quantile < 1.0)) {
    fail(ErrorKind::InvalidArgument, "tuning_quantile must lie in (0, 1)");
  }
  if (data.rows() <= 3) fail(ErrorKind::TooFewRows, "TooFewRows: winsorization needs n > 3");
  CovarianceEstimate init = ml_covariance(data);
  const auto n = data.rows();
  const double r2 = chi_squared_quantile(tuning_quantile, 3.0);
  const double d0 = std::sqrt(r2);
  const double phi = huber_consistency_factor(r2, 3);

  Vector mu = init.center;
  Matrix sigma = init.sigma;
  Vector u(n);
  auto distances = [&](const Vector& center, const Matrix& scatter) {
    Eigen::LLT<Matrix> llt(scatter);
    if (llt.info() != Eigen::Success) {
      fail(ErrorKind::SingularCovariance, "SingularCovariance: scatter matrix not positive definite");
    }
    const Matrix centered = (data.rowwise() - center.transpose()).transpose();
    const Matrix solved = llt.matrixL().solve(centered);
    return Vector(solved.colwise().norm().transpose());
  };

  bool converged = false;
  int it = 0;
  for (it = 1; it <= 100; ++it) {
    const Vector d = distances(mu, sigma);
    for (Eigen::Index i = 0; i < n; ++i) u(i) = d(i) > d0 ? d0 / d(i) : 1.0;
    const Vector mu_new = (data.transpose() * u) / u.sum();
    const Matrix centered = data.rowwise() - mu_new.transpose();
    Matrix sigma_new =
        centered.transpose() * u.cwiseProduct(u).asDiagonal() * centered / (static_cast<double>(n) * phi);
    sigma_new = 0.5 * (sigma_new + sigma_new.transpose());
    const double change = (sigma_new - sigma).norm();
    mu = mu_new;
    sigma = sigma_new;
    if (change <= 1e-8 * std::max(1.0, sigma.norm())) {
      converged = true;
      break;
    }
  }
  if (!converged) fail(ErrorKind::NoConvergence, "NoConvergence: Huber covariance after 100 iterations");

  const Vector d = distances(mu, sigma);
  Matrix wins(n, 3);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (d(i) > d0) {
      wins.row(i) = mu.transpose() + (d0 / d(i)) * (data.row(i) - mu.transpose());
    } else {
      wins.row(i) = data.row(i);
    }
  }
  // Location and scatter are both moments of the winsorized data.
  CovarianceEstimate est = ml_covariance(wins);
  est.winsorized_data = std::move(wins);
  est.huber_center = mu;
  est.huber_scatter = sigma;
  est.tuning_quantile = tuning_quantile;
  est.radius = d0;
  est.iterations = it;
  return est;
}

SimpleMediationCoefficients mediation_from_covariance(const CovarianceEstimate& est) {
  const Matrix& s = est.sigma;
  const double sxx = s(0, 0), sxm = s(0, 1), sxy = s(0, 2);
  const double smm = s(1, 1), smy = s(1, 2), syy = s(2, 2);
  const double det = smm * sxx - sxm * sxm;
  if (!(sxx > 0.0) || !(det > 1e-14 * std::max(1.0, smm * sxx))) {
    fail(ErrorKind::DegenerateMoments, "DegenerateMoments: covariance of (X, M) is singular");
  }
  SimpleMediationCoefficients out;
  out.a = sxm / sxx;
  out.b = (smy * sxx - sxm * sxy) / det;
  out.c = (sxy * smm - sxm * smy) / det;
  out.c_total = sxy / sxx;
  const Vector& mu = est.center;
  out.intercept_m = mu(1) - out.a * mu(0);
  out.intercept_y = mu(2) - out.b * mu(1) - out.c * mu(0);
  out.residual_var_m = smm - out.a * out.a * sxx;
  out.residual_var_y = syy - (out.b * smy + out.c * sxy);
  return out;
}

}  // namespace frbmed
