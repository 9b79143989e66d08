#include <cmath>
#include <random>

#include "doctest.h"
#include "frbmed/error.hpp"
#include "frbmed/robust.hpp"

using namespace frbmed;

namespace {

struct Problem {
  Matrix x;
  Vector y;
};

Problem linear_problem(int n, std::uint32_t seed, double outlier_share = 0.0) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> z;
  Problem p;
  p.x.resize(n, 3);
  p.y.resize(n);
  for (int i = 0; i < n; ++i) {
    p.x(i, 0) = 1.0;
    p.x(i, 1) = z(gen);
    p.x(i, 2) = z(gen);
    p.y(i) = 1.0 + 2.0 * p.x(i, 1) - 1.0 * p.x(i, 2) + z(gen);
  }
  const int k = static_cast<int>(outlier_share * n);
  for (int i = 0; i < k; ++i) p.y(i) += 50.0;
  return p;
}

ErrorKind kind_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  return ErrorKind::NumericFailure;
}

}  // namespace

TEST_CASE("OLS against the normal equations") {
  Matrix x(6, 3);
  x << 1, 1, 2, 1, 2, 1, 1, 3, 0, 1, 4, 1, 1, 5, 3, 1, 6, 2;
  Vector y(6);
  y << 1, 3, 2, 5, 4, 6;
  const auto fit = fit_ols(x, y);
  CHECK(fit.coefficients(0) == doctest::Approx(0.5).epsilon(1e-13));
  CHECK(fit.coefficients(1) == doctest::Approx(51.0 / 56.0).epsilon(1e-13));
  CHECK(fit.coefficients(2) == doctest::Approx(-0.125).epsilon(1e-13));
  CHECK(fit.scale == doctest::Approx(1.1100193048514324).epsilon(1e-12));
  CHECK(fit.residual_df() == 3.0);
  // Residuals are orthogonal to the design.
  CHECK((x.transpose() * fit.residuals).norm() < 1e-12);
}

TEST_CASE("OLS rejects collinear designs") {
  Matrix x(5, 3);
  x << 1, 1, 2, 1, 2, 4, 1, 3, 6, 1, 4, 8, 1, 5, 10;
  Vector y = Vector::LinSpaced(5, 0, 1);
  CHECK(kind_of([&] { fit_ols(x, y); }) == ErrorKind::RankDeficient);
  CHECK(kind_of([&] { fit_mm_regression(x, y, MMConfig{}, 1); }) == ErrorKind::RankDeficient);
}

TEST_CASE("weighted least squares") {
  const auto p = linear_problem(30, 3);
  Vector w = Vector::LinSpaced(30, 0.0, 2.0);
  const Vector beta = fit_wls(p.x, p.y, w);
  const Matrix xtwx = p.x.transpose() * w.asDiagonal() * p.x;
  const Vector direct = xtwx.ldlt().solve(p.x.transpose() * w.asDiagonal() * p.y);
  CHECK((beta - direct).norm() < 1e-10);

  Vector w2 = Vector::Zero(30);
  w2(0) = w2(1) = 1.0;
  CHECK(kind_of([&] { fit_wls(p.x, p.y, w2); }) == ErrorKind::SingularWeightedDesign);
}

TEST_CASE("S-regression minimizes the S-scale") {
  const auto p = linear_problem(60, 11, 0.2);
  const SScaleConfig cfg;
  const auto s = fit_s_regression(p.x, p.y, cfg, 5);
  CHECK(s.scale == doctest::Approx(s_scale(s.residuals, cfg).scale).epsilon(1e-9));
  const auto ols = fit_ols(p.x, p.y);
  CHECK(s.scale < s_scale(ols.residuals, cfg).scale);
  CHECK(std::abs(s.coefficients(1) - 2.0) < 0.6);
}

TEST_CASE("MM-regression") {
  const auto p = linear_problem(100, 7, 0.1);
  const MMConfig cfg;
  const auto mm = fit_mm_regression(p.x, p.y, cfg, 9);
  CHECK(mm.converged);
  CHECK(mm.method == FitMethod::MM);
  CHECK(std::abs(mm.coefficients(1) - 2.0) < 0.4);
  CHECK(std::abs(mm.coefficients(2) + 1.0) < 0.4);
  for (int i = 0; i < 10; ++i) CHECK(mm.weights(i) < 1e-3);

  SUBCASE("estimating equations hold at the fixed scale") {
    Vector score = Vector::Zero(3);
    for (Eigen::Index i = 0; i < p.x.rows(); ++i) {
      score += bisquare_psi(mm.residuals(i) / mm.scale, cfg.c) * p.x.row(i).transpose();
    }
    CHECK(score.norm() < 1e-7);
  }
  SUBCASE("objective decreases") {
    for (std::size_t i = 1; i < mm.objective_trace.size(); ++i) {
      CHECK(mm.objective_trace[i] <= mm.objective_trace[i - 1] + 1e-12);
    }
  }
  SUBCASE("deterministic given the seed") {
    const auto again = fit_mm_regression(p.x, p.y, cfg, 9);
    CHECK(again.coefficients == mm.coefficients);
  }
  SUBCASE("regression and scale equivariance") {
    Vector y2 = 3.0 * p.y + p.x.col(1) * 0.5 + Vector::Constant(p.y.size(), 4.0);
    const auto t = fit_mm_regression(p.x, y2, cfg, 9);
    CHECK(t.coefficients(0) == doctest::Approx(3.0 * mm.coefficients(0) + 4.0).epsilon(1e-6));
    CHECK(t.coefficients(1) == doctest::Approx(3.0 * mm.coefficients(1) + 0.5).epsilon(1e-6));
    CHECK(t.scale == doctest::Approx(3.0 * mm.scale).epsilon(1e-6));
  }
}

TEST_CASE("MM on clean data stays near OLS") {
  const auto p = linear_problem(400, 21);
  const auto mm = fit_mm_regression(p.x, p.y, MMConfig{}, 2);
  const auto ols = fit_ols(p.x, p.y);
  CHECK((mm.coefficients - ols.coefficients).norm() < 0.15);
  CHECK(mm.scale == doctest::Approx(1.0).epsilon(0.15));
}

TEST_CASE("exact fit of most observations gives a zero scale") {
  Matrix x(10, 2);
  Vector y(10);
  for (int i = 0; i < 10; ++i) {
    x(i, 0) = 1.0;
    x(i, 1) = i;
    y(i) = 2.0 + 0.5 * i;
  }
  y(3) += 5.0;
  y(8) -= 4.0;
  const auto mm = fit_mm_regression(x, y, MMConfig{}, 1);
  CHECK(mm.zero_scale);
  CHECK(mm.scale == 0.0);
  CHECK(mm.coefficients(0) == doctest::Approx(2.0).epsilon(1e-10));
  CHECK(mm.coefficients(1) == doctest::Approx(0.5).epsilon(1e-10));
  CHECK(mm.weights(3) == 0.0);
  CHECK(mm.weights(0) == 1.0);
}

TEST_CASE("median regression") {
  Vector xs(10), y(10);
  xs << 0.5, 1.2, 2.0, 2.9, 3.1, 4.4, 5.0, 6.3, 7.1, 8.0;
  y << 1.1, 0.7, 2.8, 3.0, 9.5, 4.1, 5.6, 5.2, 8.8, 7.7;
  Matrix x(10, 2);
  x.col(0).setOnes();
  x.col(1) = xs;
  const auto fit = fit_median_regression(x, y);
  // Linear-programming optimum from an external solver.
  CHECK(l1_objective(x, y, fit.coefficients) == doctest::Approx(11.588).epsilon(1e-10));
  CHECK(fit.coefficients(0) == doctest::Approx(0.66).epsilon(1e-9));
  CHECK(fit.coefficients(1) == doctest::Approx(0.88).epsilon(1e-9));
  CHECK(fit.method == FitMethod::Median);
  CHECK(fit.scale > 0.0);
  CHECK(fit.covariance.rows() == 2);
}

TEST_CASE("median regression is an L1 vertex") {
  // An optimum interpolates at least p observations.
  const auto p = linear_problem(25, 4, 0.1);
  const auto fit = fit_median_regression(p.x, p.y);
  int exact = 0;
  for (Eigen::Index i = 0; i < fit.residuals.size(); ++i) exact += std::abs(fit.residuals(i)) < 1e-9;
  CHECK(exact >= 3);
  // Small moves do not improve the objective.
  const double base = l1_objective(p.x, p.y, fit.coefficients);
  for (int j = 0; j < 3; ++j) {
    for (double h : {-1e-4, 1e-4}) {
      Vector b = fit.coefficients;
      b(j) += h;
      CHECK(l1_objective(p.x, p.y, b) >= base - 1e-12);
    }
  }
}
