#include <cmath>
#include <random>

#include "doctest.h"
#include "frbmed/covariance.hpp"
#include "frbmed/error.hpp"

using namespace frbmed;

namespace {

Matrix mediation_data(int n, std::uint32_t seed, int outliers = 0) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> z;
  Matrix d(n, 3);
  for (int i = 0; i < n; ++i) {
    const double x = z(gen);
    const double m = 0.5 * x + z(gen);
    const double y = 0.4 * m + 0.2 * x + z(gen);
    d.row(i) << x, m, y;
  }
  for (int i = 0; i < outliers; ++i) d.row(i) << 8.0, -8.0, 12.0;
  return d;
}

}  // namespace

TEST_CASE("ML covariance uses denominator n") {
  Matrix d(4, 3);
  d << 1, 2, 3, 2, 2, 5, 3, 4, 4, 6, 4, 8;
  const auto est = ml_covariance(d);
  CHECK(est.center(0) == doctest::Approx(3.0));
  CHECK(est.sigma(0, 0) == doctest::Approx(3.5));  // (4+1+0+9)/4
  CHECK(est.sigma(0, 1) == est.sigma(1, 0));
  CHECK_THROWS_AS(ml_covariance(d.topRows(3)), Error);
}

TEST_CASE("moment-based coefficients equal least squares") {
  const Matrix d = mediation_data(50, 1);
  const auto c = mediation_from_covariance(ml_covariance(d));
  Matrix xm(50, 2);
  xm.col(0).setOnes();
  xm.col(1) = d.col(0);
  const Vector a = xm.colPivHouseholderQr().solve(d.col(1));
  Matrix xy(50, 3);
  xy.col(0).setOnes();
  xy.col(1) = d.col(1);
  xy.col(2) = d.col(0);
  const Vector bc = xy.colPivHouseholderQr().solve(d.col(2));
  CHECK(c.a == doctest::Approx(a(1)).epsilon(1e-12));
  CHECK(c.intercept_m == doctest::Approx(a(0)).epsilon(1e-10));
  CHECK(c.b == doctest::Approx(bc(1)).epsilon(1e-12));
  CHECK(c.c == doctest::Approx(bc(2)).epsilon(1e-12));
  CHECK(c.intercept_y == doctest::Approx(bc(0)).epsilon(1e-10));
  CHECK(c.c_total == doctest::Approx(c.a * c.b + c.c).epsilon(1e-12));
  const Vector res = d.col(1) - xm * a;
  CHECK(c.residual_var_m == doctest::Approx(res.squaredNorm() / 50.0).epsilon(1e-10));
}

TEST_CASE("Huber consistency factor") {
  // chi-square based reference value at the 0.95 quantile of chi2(3)
  const double r2 = 7.814727903251178;
  CHECK(huber_consistency_factor(r2, 3) == doctest::Approx(0.9634991999983127).epsilon(1e-12));
  CHECK(huber_consistency_factor(1e6, 3) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("winsorization pulls outliers onto the ellipsoid") {
  const Matrix d = mediation_data(100, 3, 8);
  const auto est = huber_winsorize(d);
  REQUIRE(est.winsorized_data);
  REQUIRE(est.huber_center);
  const Matrix& w = *est.winsorized_data;
  const Eigen::LLT<Matrix> llt(*est.huber_scatter);
  int moved = 0;
  for (Eigen::Index i = 0; i < d.rows(); ++i) {
    const Vector dev = (w.row(i) - est.huber_center->transpose()).transpose();
    const double dist = llt.matrixL().solve(dev).norm();
    CHECK(dist <= est.radius + 1e-9);
    if ((w.row(i) - d.row(i)).norm() > 0.0) {
      ++moved;
      CHECK(dist == doctest::Approx(est.radius).epsilon(1e-9));
    }
  }
  for (int i = 0; i < 8; ++i) CHECK((w.row(i) - d.row(i)).norm() > 1.0);
  CHECK(moved >= 8);
  CHECK(est.radius == doctest::Approx(std::sqrt(7.814727903251178)).epsilon(1e-12));
  // Winsorized outliers pull the a path less than raw ones.
  const auto c = mediation_from_covariance(est);
  const auto raw = mediation_from_covariance(ml_covariance(d));
  CHECK(std::abs(raw.a - 0.5) > std::abs(c.a - 0.5));
}

TEST_CASE("winsorization is translation equivariant") {
  const Matrix d = mediation_data(60, 5, 4);
  Matrix shifted = d;
  shifted.col(0).array() += 3.0;
  shifted.col(2).array() -= 10.0;
  const auto a = huber_winsorize(d);
  const auto b = huber_winsorize(shifted);
  CHECK((a.sigma - b.sigma).norm() < 1e-7);
  CHECK(b.center(0) == doctest::Approx(a.center(0) + 3.0).epsilon(1e-8));
}

TEST_CASE("degenerate moments") {
  Matrix d(10, 3);
  for (int i = 0; i < 10; ++i) d.row(i) << i, 2.0 * i, std::sin(i);
  CHECK_THROWS_AS(mediation_from_covariance(ml_covariance(d)), Error);
  CHECK_THROWS_AS(huber_winsorize(d), Error);
}
