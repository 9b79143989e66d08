#include "frbmed/diagnostics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>

#include "frbmed/distributions.hpp"
#include "frbmed/error.hpp"

namespace frbmed {

const char* to_string(ResidualSide side) {
  return side == ResidualSide::Negative ? "negative" : "positive";
}

std::vector<double> default_threshold_grid(std::size_t points) {
  std::vector<double> grid(points);
  for (std::size_t i = 0; i < points; ++i) {
    grid[i] = points == 1 ? 1.0 : static_cast<double>(i) / static_cast<double>(points - 1);
  }
  return grid;
}

double expected_weight_fraction(double w0, double tuning) {
  w0 = std::clamp(w0, 0.0, 1.0);
  // weight(t) = (1 - (t/c)^2)^2 inverted for t >= 0.
  const double t = tuning * std::sqrt(1.0 - std::sqrt(w0));
  return 1.0 - normal_cdf(t);
}

std::vector<WeightCurve> weight_curve(const std::string& equation, const RegressionFit& fit,
                                      double tuning, const std::vector<double>& grid) {
  if (fit.method != FitMethod::MM) {
    fail(ErrorKind::NotRobustFit, "NotRobustFit: weight curves need an MM fit");
  }
  const double n = static_cast<double>(fit.weights.size());
  std::vector<WeightCurve> out;
  for (ResidualSide side : {ResidualSide::Negative, ResidualSide::Positive}) {
    std::vector<double> w;
    for (Eigen::Index i = 0; i < fit.weights.size(); ++i) {
      const bool positive = fit.residuals(i) >= 0.0;
      if (positive == (side == ResidualSide::Positive)) w.push_back(fit.weights(i));
    }
    std::sort(w.begin(), w.end());
    WeightCurve c;
    c.equation = equation;
    c.side = side;
    c.thresholds = grid;
    for (double t : grid) {
      const auto count = std::upper_bound(w.begin(), w.end(), t) - w.begin();
      c.observed.push_back(static_cast<double>(count) / n);
      c.expected.push_back(expected_weight_fraction(t, tuning));
    }
    out.push_back(std::move(c));
  }
  return out;
}

double max_curve_gap(const WeightCurve& curve) {
  double gap = 0.0;
  for (std::size_t i = 0; i < curve.observed.size(); ++i) {
    gap = std::max(gap, std::abs(curve.observed[i] - curve.expected[i]));
  }
  return gap;
}

namespace {

double residual_variance(const RegressionFit& fit, double wsum) {
  if (fit.method == FitMethod::MM) return fit.scale * fit.scale;
  double ss = 0.0;
  for (Eigen::Index i = 0; i < fit.residuals.size(); ++i) {
    ss += fit.weights(i) * fit.residuals(i) * fit.residuals(i);
  }
  return ss / (wsum - 1.0);
}

}  // namespace

WeightedMoments consistent_weighted_covariance(const RegressionFit& fit, const Matrix& x,
                                               const Vector& y) {
  const auto q = x.cols();
  if (fit.coefficients.size() != q + 1) {
    fail(ErrorKind::InvalidArgument,
         "consistent_weighted_covariance: expected an intercept plus one coefficient per column");
  }
  const Vector& w = fit.weights;
  const double wsum = w.sum();
  if (!(wsum > static_cast<double>(q + 1))) {
    fail(ErrorKind::InsufficientWeight, "InsufficientWeight: total weight " +
                                            std::to_string(wsum) + " does not exceed " +
                                            std::to_string(q + 1));
  }
  WeightedMoments m;
  m.center.resize(q + 1);
  m.center(0) = w.dot(y) / wsum;
  const Vector xbar = (x.transpose() * w) / wsum;
  m.center.tail(q) = xbar;
  const Matrix xc = x.rowwise() - xbar.transpose();
  const Matrix sxx = xc.transpose() * w.asDiagonal() * xc / (wsum - 1.0);
  const Vector beta = fit.coefficients.tail(q);
  const double s2 = residual_variance(fit, wsum);
  m.residual_scale = std::sqrt(s2);
  m.sigma.resize(q + 1, q + 1);
  const Vector sxy = sxx * beta;
  m.sigma(0, 0) = beta.dot(sxy) + s2;
  m.sigma.block(1, 0, q, 1) = sxy;
  m.sigma.block(0, 1, 1, q) = sxy.transpose();
  m.sigma.block(1, 1, q, q) = sxx;
  return m;
}

Matrix ellipse_path(const Vector& center, const Matrix& shape, double quantile_level,
                    std::size_t n_points) {
  if (center.size() != 2 || shape.rows() != 2 || shape.cols() != 2) {
    fail(ErrorKind::InvalidArgument, "ellipse_path: expects a 2-vector and a 2 x 2 matrix");
  }
  Eigen::LLT<Matrix> llt(shape);
  if (llt.info() != Eigen::Success || !(std::abs(shape(0, 1) - shape(1, 0)) <=
                                        1e-12 * std::max(1.0, shape.cwiseAbs().maxCoeff()))) {
    fail(ErrorKind::NotPositiveDefinite, "NotPositiveDefinite: ellipse shape matrix");
  }
  const Matrix L = llt.matrixL();
  const double r = std::sqrt(chi_squared_quantile(quantile_level, 2.0));
  Matrix path(static_cast<Eigen::Index>(n_points), 2);
  for (std::size_t i = 0; i < n_points; ++i) {
    const double theta = 2.0 * std::numbers::pi * static_cast<double>(i) /
                         static_cast<double>(n_points > 1 ? n_points - 1 : 1);
    const Eigen::Vector2d u(r * std::cos(theta), r * std::sin(theta));
    path.row(static_cast<Eigen::Index>(i)) = (center + L * u).transpose();
  }
  return path;
}

namespace {

Eigen::Index regressor_index(const EquationDesign& design, const std::string& name) {
  for (std::size_t j = 1; j < design.regressors.size(); ++j) {
    if (design.regressors[j] == name) return static_cast<Eigen::Index>(j);
  }
  fail(ErrorKind::UnknownRegressor, "UnknownRegressor: '" + name +
                                        "' is not a regressor in the equation for " +
                                        design.response);
}

}  // namespace

Vector partial_residuals(const EquationDesign& design, const RegressionFit& fit,
                         const std::string& display) {
  const Eigen::Index j = regressor_index(design, display);
  Vector beta = fit.coefficients;
  beta(j) = 0.0;
  return design.y - design.x * beta;
}

EllipseData ellipse_data(const EquationFit& equation, const std::string& display,
                         double quantile_level) {
  const auto& design = equation.design;
  const auto& fit = equation.fit;
  const Eigen::Index j = regressor_index(design, display);
  const Vector pr = partial_residuals(design, fit, display);

  // Moments of (partial response, display) as a one-slope regression.
  RegressionFit one = fit;
  one.coefficients = (Vector(2) << fit.coefficients(0), fit.coefficients(j)).finished();
  const Matrix xj = design.x.col(j);
  const auto m = consistent_weighted_covariance(one, xj, pr);

  EllipseData e;
  e.x_name = display;
  e.y_name = design.response;
  e.quantile_level = quantile_level;
  e.center = (Vector(2) << m.center(1), m.center(0)).finished();
  e.shape.resize(2, 2);
  e.shape << m.sigma(1, 1), m.sigma(1, 0), m.sigma(0, 1), m.sigma(0, 0);
  e.path = ellipse_path(e.center, e.shape, quantile_level);
  e.points.resize(pr.size(), 2);
  e.points.col(0) = xj.col(0);
  e.points.col(1) = pr;
  e.point_weights = fit.weights;
  return e;
}

DensityGrid density_grid(const std::vector<double>& replicates, std::size_t n_grid) {
  if (replicates.size() < 10) {
    fail(ErrorKind::InvalidArgument, "density_grid: needs at least 10 replicates");
  }
  if (n_grid < 2) fail(ErrorKind::InvalidArgument, "density_grid: needs at least 2 grid points");
  std::vector<double> v = replicates;
  std::sort(v.begin(), v.end());
  const double R = static_cast<double>(v.size());
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / R;
  double ss = 0.0;
  for (double t : v) ss += (t - mean) * (t - mean);
  const double sd = std::sqrt(ss / (R - 1.0));
  const double iqr = quantile_sorted(v, 0.75) - quantile_sorted(v, 0.25);
  double spread = std::min(sd, iqr / 1.34);
  if (!(spread > 0.0)) spread = sd;
  if (!(spread > 0.0)) {
    fail(ErrorKind::DegenerateDistribution,
         "DegenerateDistribution: all replicates are equal, no density to estimate");
  }
  DensityGrid d;
  d.bandwidth = 0.9 * spread * std::pow(R, -0.2);
  const double lo = v.front() - 4.0 * d.bandwidth;
  const double hi = v.back() + 4.0 * d.bandwidth;
  const double norm = 1.0 / (R * d.bandwidth * std::sqrt(2.0 * std::numbers::pi));
  d.x.resize(n_grid);
  d.density.resize(n_grid);
  for (std::size_t g = 0; g < n_grid; ++g) {
    const double x = lo + (hi - lo) * static_cast<double>(g) / static_cast<double>(n_grid - 1);
    double s = 0.0;
    for (double t : v) {
      const double u = (x - t) / d.bandwidth;
      s += std::exp(-0.5 * u * u);
    }
    d.x[g] = x;
    d.density[g] = s * norm;
  }
  d.estimate = mean;
  return d;
}

DensityGrid density_grid(const BootstrapResult& result, const std::string& label,
                         std::size_t n_grid) {
  const std::size_t l = result.label_index(label);
  DensityGrid d = density_grid(result.column(l), n_grid);
  d.label = result.labels[l].name;
  d.estimate = result.boot_estimates(static_cast<Eigen::Index>(l));
  d.interval = result.intervals[l];
  return d;
}

RSquared weighted_r_squared(const RegressionFit& fit, const Vector& y) {
  const Vector& w = fit.weights;
  const double wsum = w.sum();
  const double ybar = w.dot(y) / wsum;
  double ssr = 0.0;
  double sst = 0.0;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    ssr += w(i) * fit.residuals(i) * fit.residuals(i);
    sst += w(i) * (y(i) - ybar) * (y(i) - ybar);
  }
  if (!(sst > 0.0)) {
    fail(ErrorKind::ZeroWeightedVariance, "ZeroWeightedVariance: weighted response has no spread");
  }
  RSquared out;
  const double n = static_cast<double>(y.size());
  const double p = static_cast<double>(fit.coefficients.size());
  out.r2 = 1.0 - ssr / sst;
  out.adjusted = 1.0 - (ssr / sst) * (n - 1.0) / (n - p);
  return out;
}

std::vector<std::size_t> potential_outliers(const RegressionFit& fit, double cutoff) {
  std::vector<std::size_t> out;
  for (Eigen::Index i = 0; i < fit.weights.size(); ++i) {
    if (fit.weights(i) <= cutoff) out.push_back(static_cast<std::size_t>(i));
  }
  return out;
}

std::vector<CiRow> ci_table(const BootstrapResult& result) {
  std::vector<CiRow> rows;
  for (std::size_t l = 0; l < result.labels.size(); ++l) {
    if (!result.intervals[l]) continue;
    rows.push_back({result.labels[l].name, result.data_estimates(static_cast<Eigen::Index>(l)),
                    result.boot_estimates(static_cast<Eigen::Index>(l)), result.intervals[l]->lo,
                    result.intervals[l]->hi});
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Export

std::string csv_field(const std::string& text) {
  if (text.find_first_of(",\"\r\n") == std::string::npos) return text;
  std::string out = "\"";
  for (char ch : text) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

std::string format_double(double v) {
  if (std::isnan(v)) return "NA";
  if (std::isinf(v)) return v > 0 ? "Inf" : "-Inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string weight_curve_csv(const std::vector<WeightCurve>& curves) {
  std::ostringstream os;
  os << "threshold,side,observed,expected\n";
  for (const auto& c : curves) {
    for (std::size_t i = 0; i < c.thresholds.size(); ++i) {
      os << format_double(c.thresholds[i]) << ',' << to_string(c.side) << ','
         << format_double(c.observed[i]) << ',' << format_double(c.expected[i]) << '\n';
    }
  }
  return os.str();
}

std::string ellipse_path_csv(const EllipseData& e) {
  std::ostringstream os;
  os << "x,y\n";
  for (Eigen::Index i = 0; i < e.path.rows(); ++i) {
    os << format_double(e.path(i, 0)) << ',' << format_double(e.path(i, 1)) << '\n';
  }
  return os.str();
}

std::string ellipse_points_csv(const EllipseData& e) {
  std::ostringstream os;
  os << "x,y,weight\n";
  for (Eigen::Index i = 0; i < e.points.rows(); ++i) {
    os << format_double(e.points(i, 0)) << ',' << format_double(e.points(i, 1)) << ','
       << format_double(e.point_weights(i)) << '\n';
  }
  return os.str();
}

std::string density_csv(const DensityGrid& d) {
  std::ostringstream os;
  os << "x,density\n";
  for (std::size_t i = 0; i < d.x.size(); ++i) {
    os << format_double(d.x[i]) << ',' << format_double(d.density[i]) << '\n';
  }
  return os.str();
}

std::string ci_csv(const std::vector<CiRow>& rows) {
  std::ostringstream os;
  os << "label,data,boot,lower,upper\n";
  for (const auto& r : rows) {
    os << csv_field(r.label) << ',' << format_double(r.data) << ',' << format_double(r.boot)
       << ',' << format_double(r.lo) << ',' << format_double(r.hi) << '\n';
  }
  return os.str();
}

namespace {

nlohmann::json num(double v) {
  return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
}

nlohmann::json nums(const std::vector<double>& v) {
  auto arr = nlohmann::json::array();
  for (double x : v) arr.push_back(num(x));
  return arr;
}

nlohmann::json xy_rows(const Matrix& m) {
  auto arr = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) arr.push_back({{"x", num(m(i, 0))}, {"y", num(m(i, 1))}});
  return arr;
}

}  // namespace

nlohmann::json to_json(const std::vector<WeightCurve>& curves) {
  auto arr = nlohmann::json::array();
  for (const auto& c : curves) {
    arr.push_back({{"equation", c.equation},
                   {"side", to_string(c.side)},
                   {"threshold", nums(c.thresholds)},
                   {"observed", nums(c.observed)},
                   {"expected", nums(c.expected)}});
  }
  return arr;
}

nlohmann::json to_json(const EllipseData& e) {
  nlohmann::json j;
  j["x_name"] = e.x_name;
  j["y_name"] = e.y_name;
  j["center"] = {num(e.center(0)), num(e.center(1))};
  j["shape"] = {{num(e.shape(0, 0)), num(e.shape(0, 1))}, {num(e.shape(1, 0)), num(e.shape(1, 1))}};
  j["quantile_level"] = e.quantile_level;
  j["path"] = xy_rows(e.path);
  auto pts = nlohmann::json::array();
  for (Eigen::Index i = 0; i < e.points.rows(); ++i) {
    pts.push_back({{"x", num(e.points(i, 0))}, {"y", num(e.points(i, 1))},
                   {"weight", num(e.point_weights(i))}});
  }
  j["points"] = std::move(pts);
  return j;
}

nlohmann::json to_json(const DensityGrid& d) {
  nlohmann::json j;
  j["label"] = d.label;
  j["bandwidth"] = d.bandwidth;
  j["estimate"] = num(d.estimate);
  if (d.interval) j["interval"] = {num(d.interval->lo), num(d.interval->hi)};
  j["x"] = nums(d.x);
  j["density"] = nums(d.density);
  return j;
}

nlohmann::json to_json(const std::vector<CiRow>& rows) {
  auto arr = nlohmann::json::array();
  for (const auto& r : rows) {
    arr.push_back({{"label", r.label}, {"data", num(r.data)}, {"boot", num(r.boot)},
                   {"lower", num(r.lo)}, {"upper", num(r.hi)}});
  }
  return arr;
}

}  // namespace frbmed
