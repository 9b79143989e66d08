#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

namespace frbmed {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Bisquare tuning for maximal breakdown of the S-scale.
inline constexpr double kSTuning = 1.54764;
/// Bisquare tuning for 85% normal efficiency of the MM-step.
inline constexpr double kMMTuning = 3.443689;

// Tukey bisquare. rho is bounded by c^2/6; psi = rho', weight = psi(x)/x.
double bisquare_rho(double x, double c);
double bisquare_psi(double x, double c);
double bisquare_psi_prime(double x, double c);
double bisquare_weight(double x, double c);

struct BisquareLoss {
  double c = kMMTuning;

  explicit BisquareLoss(double tuning = kMMTuning);

  double rho(double x) const { return bisquare_rho(x, c); }
  double psi(double x) const { return bisquare_psi(x, c); }
  double psi_prime(double x) const { return bisquare_psi_prime(x, c); }
  double weight(double x) const { return bisquare_weight(x, c); }
  double max_rho() const { return c * c / 6.0; }
};

/// E[rho(Z; c)] for standard normal Z, by adaptive Gauss-Kronrod quadrature.
double normal_expected_rho(double c);

struct SScaleConfig {
  double c_s = kSTuning;
  double delta = 0.0;  // consistency constant, E[rho_S(Z)]
  int n_subsamples = 500;
  int k_refine_steps = 2;
  int best_candidates = 5;
  double tol = 1e-7;
  int max_iter = 200;

  /// Computes delta for the given tuning constant.
  SScaleConfig(double tuning = kSTuning);
};

struct ScaleResult {
  double scale = 0.0;
  /// Too many exact zeros for a positive solution; scale is 0.
  bool degenerate = false;
  int iterations = 0;
};

/// Solves mean(rho_S(r_i / s)) = delta for s > 0.
ScaleResult s_scale(const Vector& residuals, const SScaleConfig& cfg);

enum class FitMethod { OLS, S, MM, Median, WLS, Covariance };

const char* to_string(FitMethod method);

struct RegressionFit {
  Vector coefficients;  // intercept first when the design has one
  double scale = 0.0;
  Vector weights;
  Vector residuals;
  FitMethod method = FitMethod::OLS;
  bool converged = true;
  int iterations = 0;
  /// Scale step returned 0 (exact fit of at least half the observations).
  bool zero_scale = false;
  /// Approximate covariance of the coefficients (classical formulas for OLS
  /// and median fits, weighted least squares at convergence for MM).
  Matrix covariance;
  /// MM objective sum rho(r_i / scale) after each IRLS iteration.
  std::vector<double> objective_trace;

  double residual_df() const {
    return static_cast<double>(residuals.size() - coefficients.size());
  }
};

struct MMConfig {
  double c = kMMTuning;
  double tol = 1e-10;
  int max_iter = 500;
  SScaleConfig s;
};

struct MedianConfig {
  int irls_iterations = 60;
  double eps_start = 1e-2;
  double eps_min = 1e-9;
  int max_vertex_steps = 10000;
};

/// Least squares via column-pivoting QR; scale uses the n - p denominator.
RegressionFit fit_ols(const Matrix& x, const Vector& y);

/// (sum w_i x_i x_i')^-1 sum w_i x_i y_i via QR of the row-scaled design.
Vector fit_wls(const Matrix& x, const Vector& y, const Vector& w);

/// Fast-S: elemental starts, short IRLS refinement, full refinement of the
/// best candidates. Deterministic given seed.
RegressionFit fit_s_regression(const Matrix& x, const Vector& y, const SScaleConfig& cfg,
                               std::uint64_t seed);

/// MM-estimate: S-estimate start, then bisquare IRLS at the fixed S-scale.
RegressionFit fit_mm_regression(const Matrix& x, const Vector& y, const MMConfig& cfg,
                                std::uint64_t seed);

/// Least absolute deviations. Smoothed IRLS brings the fit close; an exact
/// vertex descent over elemental fits then finishes at an L1 optimum.
RegressionFit fit_median_regression(const Matrix& x, const Vector& y,
                                    const MedianConfig& cfg = {});

double l1_objective(const Matrix& x, const Vector& y, const Vector& beta);

}  // namespace frbmed
