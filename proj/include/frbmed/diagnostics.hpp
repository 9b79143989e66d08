#pragma once

#include <optional>
#include <string>
#include <vector>

#include "frbmed/bootstrap.hpp"
#include "json.hpp"

namespace frbmed {

enum class ResidualSide { Negative, Positive };

const char* to_string(ResidualSide side);

/// Fraction of all observations on one residual side whose weight is at most
/// each threshold, next to the normal-theory reference 1 - Phi(t(w0)).
struct WeightCurve {
  std::string equation;
  ResidualSide side = ResidualSide::Negative;
  std::vector<double> thresholds;
  std::vector<double> observed;
  std::vector<double> expected;
};

std::vector<double> default_threshold_grid(std::size_t points = 200);

/// Expected share of all observations on one side with weight <= w0 when the
/// scaled residuals are standard normal.
double expected_weight_fraction(double w0, double tuning = kMMTuning);

/// Negative side first. Throws NotRobustFit unless the fit is an MM fit.
std::vector<WeightCurve> weight_curve(const std::string& equation, const RegressionFit& fit,
                                      double tuning = kMMTuning,
                                      const std::vector<double>& grid = default_threshold_grid());

/// Largest |observed - expected| over the grid of one curve.
double max_curve_gap(const WeightCurve& curve);

/// Location and scatter of (y, x_1, ..., x_q) implied by a regression fit:
/// weighted means, weighted slope covariance with denominator sum(w) - 1,
/// cross covariance Sigma_xx beta and Var(y) = beta' Sigma_xx beta + s^2.
/// `x` holds the slope columns only (no intercept).
struct WeightedMoments {
  Vector center;  // y first
  Matrix sigma;
  double residual_scale = 0.0;
};

WeightedMoments consistent_weighted_covariance(const RegressionFit& fit, const Matrix& x,
                                               const Vector& y);

struct EllipseData {
  std::string x_name;
  std::string y_name;
  Vector center;  // (x, y)
  Matrix shape;   // 2 x 2
  double quantile_level = 0.975;
  Matrix path;    // n_points x 2
  Matrix points;  // n x 2: x and y (partial residuals when other regressors exist)
  Vector point_weights;
};

Matrix ellipse_path(const Vector& center, const Matrix& shape, double quantile_level,
                    std::size_t n_points = 361);

/// y minus the fitted contribution of every regressor except `display`
/// (the intercept included).
Vector partial_residuals(const EquationDesign& design, const RegressionFit& fit,
                         const std::string& display);

/// Tolerance ellipse of `display` against the (partial) response of one
/// equation.
EllipseData ellipse_data(const EquationFit& equation, const std::string& display,
                         double quantile_level = 0.975);

struct DensityGrid {
  std::string label;
  std::vector<double> x;
  std::vector<double> density;
  double bandwidth = 0.0;
  double estimate = 0.0;
  std::optional<Interval> interval;
};

DensityGrid density_grid(const std::vector<double>& replicates, std::size_t n_grid = 512);

/// Density of one label's replicates with its boot estimate and interval.
DensityGrid density_grid(const BootstrapResult& result, const std::string& label,
                         std::size_t n_grid = 512);

struct RSquared {
  double r2 = 0.0;
  double adjusted = 0.0;
};

/// 1 - sum w r^2 / sum w (y - ybar_w)^2; the adjusted value scales the ratio
/// by (n - 1) / (n - p).
RSquared weighted_r_squared(const RegressionFit& fit, const Vector& y);

/// Observations with weight at or below the cutoff (0-based positions).
std::vector<std::size_t> potential_outliers(const RegressionFit& fit, double cutoff = 1e-3);

struct CiRow {
  std::string label;
  double data = 0.0;
  double boot = 0.0;
  double lo = 0.0;
  double hi = 0.0;
};

std::vector<CiRow> ci_table(const BootstrapResult& result);

// Exports. CSV columns: weight curve {threshold, side, observed, expected};
// ellipse {x, y} path and {x, y, weight} points; density {x, density}.
std::string weight_curve_csv(const std::vector<WeightCurve>& curves);
std::string ellipse_path_csv(const EllipseData& e);
std::string ellipse_points_csv(const EllipseData& e);
std::string density_csv(const DensityGrid& d);
std::string ci_csv(const std::vector<CiRow>& rows);

nlohmann::json to_json(const std::vector<WeightCurve>& curves);
nlohmann::json to_json(const EllipseData& e);
nlohmann::json to_json(const DensityGrid& d);
nlohmann::json to_json(const std::vector<CiRow>& rows);

/// RFC 4180 field quoting.
std::string csv_field(const std::string& text);
/// Shortest text that reads back to the same double.
std::string format_double(double v);

}  // namespace frbmed
