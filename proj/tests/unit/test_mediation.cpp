#include <cmath>
#include <random>

#include "doctest.h"
#include "frbmed/error.hpp"
#include "frbmed/mediation.hpp"

using namespace frbmed;

namespace {

DataTable synthetic(int n, std::uint32_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> z;
  std::vector<double> x(n), x2(n), m1(n), m2(n), m3(n), y(n), c(n);
  for (int i = 0; i < n; ++i) {
    x[i] = z(gen);
    x2[i] = z(gen);
    c[i] = z(gen);
    m1[i] = 0.5 * x[i] + 0.2 * c[i] + z(gen);
    m2[i] = 0.3 * x[i] + 0.4 * m1[i] + z(gen);
    m3[i] = 0.2 * x[i] + 0.3 * m2[i] + z(gen);
    y[i] = 0.4 * m1[i] + 0.3 * m2[i] + 0.2 * m3[i] + 0.1 * x[i] - 0.2 * x2[i] + 0.3 * c[i] + z(gen);
  }
  DataTable t;
  t.add_column("X", x);
  t.add_column("X2", x2);
  t.add_column("M1", m1);
  t.add_column("M2", m2);
  t.add_column("M3", m3);
  t.add_column("Y", y);
  t.add_column("C", c);
  return t;
}

MediationFit fit(const std::string& formula, const DataTable& t, Method m = Method::RegressionOLS) {
  const auto spec = parse_formula(formula);
  return fit_mediation(spec, select_variables(spec, t), m, FitConfig{}, 1);
}

// Coefficient of `x` in the OLS regression of Y on the given columns (plus intercept).
double total_regression(const DataTable& t, const std::vector<std::string>& cols) {
  const auto n = static_cast<Eigen::Index>(t.n_rows());
  Matrix x(n, static_cast<Eigen::Index>(cols.size()) + 1);
  x.col(0).setOnes();
  for (std::size_t j = 0; j < cols.size(); ++j) {
    x.col(static_cast<Eigen::Index>(j) + 1) =
        Eigen::Map<const Vector>(t.find(cols[j])->values.data(), n);
  }
  const Vector y = Eigen::Map<const Vector>(t.find("Y")->values.data(), n);
  return (x.transpose() * x).ldlt().solve(x.transpose() * y)(1);
}

}  // namespace

TEST_CASE("equation layout of a serial model with covariates") {
  const auto t = synthetic(30, 1);
  const auto spec = parse_formula("Y ~ serial_m(M1, M2) + X + covariates(C)");
  const auto eqs = build_equations(spec, select_variables(spec, t));
  REQUIRE(eqs.size() == 3);
  CHECK(eqs[0].regressors == std::vector<std::string>{"(Intercept)", "X", "C"});
  CHECK(eqs[1].regressors == std::vector<std::string>{"(Intercept)", "M1", "X", "C"});
  CHECK(eqs[2].regressors == std::vector<std::string>{"(Intercept)", "M1", "M2", "X", "C"});
  CHECK(eqs[1].response == "M2");
  CHECK(eqs[1].x(4, 1) == t.find("M1")->values[4]);
}

TEST_CASE("path products") {
  ModelSpec spec = parse_formula("Y ~ serial_m(M1, M2, M3) + X");
  CoefficientBundle p;
  p.a = Matrix(1, 3);
  p.a << 2, 3, 5;
  p.d = Matrix::Zero(3, 3);
  p.d(1, 0) = 7;
  p.d(2, 0) = 11;
  p.d(2, 1) = 13;
  p.b = Vector(3);
  p.b << 17, 19, 23;
  p.c = Vector::Constant(1, 0.5);
  const auto products = indirect_products(p, spec);
  REQUIRE(products.size() == 8);
  CHECK(products[0].second == 2.0 * 17);             // X -> M1 -> Y
  CHECK(products[1].second == 3.0 * 19);             // X -> M2 -> Y
  CHECK(products[2].second == 5.0 * 23);             // X -> M3 -> Y
  CHECK(products[3].second == 2.0 * 7 * 19);         // X -> M1 -> M2 -> Y
  CHECK(products[4].second == 2.0 * 11 * 23);        // X -> M1 -> M3 -> Y
  CHECK(products[5].second == 3.0 * 13 * 23);        // X -> M2 -> M3 -> Y
  CHECK(products[6].second == 2.0 * 7 * 13 * 23);    // X -> M1 -> M2 -> M3 -> Y
  double sum = 0.0;
  for (int i = 0; i < 7; ++i) sum += products[static_cast<std::size_t>(i)].second;
  CHECK(products[7].second == sum);

  const auto labels = enumerate_effects(spec);
  const Vector e = effects_from_paths(spec, labels, p);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i].role == EffectRole::Total) CHECK(e(static_cast<Eigen::Index>(i)) == sum + 0.5);
    if (labels[i].role == EffectRole::Direct) CHECK(e(static_cast<Eigen::Index>(i)) == 0.5);
  }
}

TEST_CASE("OLS total effect equals the total-effect regression") {
  const auto t = synthetic(80, 2);
  SUBCASE("simple") {
    const auto f = fit("Y ~ m(M1) + X", t);
    CHECK(f.effect("Total") == doctest::Approx(total_regression(t, {"X"})).epsilon(1e-11));
    CHECK(f.effect("Total") ==
          doctest::Approx(f.effect("Indirect[M1]") + f.effect("Direct")).epsilon(1e-14));
  }
  SUBCASE("serial, three mediators, covariate") {
    const auto f = fit("Y ~ serial_m(M1, M2, M3) + X + covariates(C)", t);
    CHECK(f.effect("Total") == doctest::Approx(total_regression(t, {"X", "C"})).epsilon(1e-11));
  }
  SUBCASE("parallel with two independents") {
    const auto f = fit("Y ~ parallel_m(M1, M2) + X + X2", t);
    CHECK(f.effect("Total[X]") == doctest::Approx(total_regression(t, {"X", "X2"})).epsilon(1e-11));
    CHECK(f.effect("Indirect[X.Total]") ==
          doctest::Approx(f.effect("Indirect[X.M1]") + f.effect("Indirect[X.M2]")).epsilon(1e-14));
  }
}

TEST_CASE("covariance route with ML moments reproduces OLS") {
  const auto t = synthetic(60, 3);
  const auto ols = fit("Y ~ m(M1) + X", t);
  const auto cov = fit("Y ~ m(M1) + X", t, Method::CovML);
  for (std::size_t i = 0; i < ols.labels.size(); ++i) {
    CHECK(cov.effects(static_cast<Eigen::Index>(i)) ==
          doctest::Approx(ols.effects(static_cast<Eigen::Index>(i))).epsilon(1e-10));
  }
  CHECK(cov.covariance.has_value());
}

TEST_CASE("method and model must match") {
  const auto t = synthetic(40, 4);
  auto kind = [&](const char* f, Method m) {
    try {
      fit(f, t, m);
    } catch (const Error& e) {
      return e.kind();
    }
    return ErrorKind::NumericFailure;
  };
  CHECK(kind("Y ~ parallel_m(M1, M2) + X", Method::CovML) == ErrorKind::MethodModelMismatch);
  CHECK(kind("Y ~ m(M1) + X + covariates(C)", Method::CovWinsorized) ==
        ErrorKind::MethodModelMismatch);
  CHECK(kind("Y ~ m(M1) + X + X2", Method::CovML) == ErrorKind::MethodModelMismatch);
}

TEST_CASE("robust fits and coefficient-only refits agree") {
  const auto t = synthetic(70, 5);
  for (Method m : {Method::RegressionOLS, Method::RegressionMM, Method::RegressionMedian,
                   Method::CovML, Method::CovWinsorized}) {
    CAPTURE(to_string(m));
    const auto spec = parse_formula("Y ~ m(M1) + X");
    const auto data = select_variables(spec, t);
    const auto f = fit_mediation(spec, data, m, FitConfig{}, 7);
    const auto coefs = fit_coefficients(spec, data, m, FitConfig{}, 7);
    for (std::size_t e = 0; e < coefs.size(); ++e) {
      CHECK((coefs[e] - f.equations[e].fit.coefficients).norm() < 1e-12);
    }
    CHECK(method_from_string(to_string(m)) == m);
  }
}

TEST_CASE("fit JSON round trip") {
  const auto t = synthetic(40, 6);
  const auto f = fit("Y ~ serial_m(M1, M2) + X", t, Method::RegressionMM);
  const auto j = fit_to_json(f, true);
  const auto back = fit_from_json(nlohmann::json::parse(j.dump()));
  CHECK(back.spec == f.spec);
  CHECK(back.effects == f.effects);
  REQUIRE(back.equations.size() == f.equations.size());
  for (std::size_t e = 0; e < f.equations.size(); ++e) {
    CHECK(back.equations[e].fit.coefficients == f.equations[e].fit.coefficients);
    CHECK(back.equations[e].fit.weights == f.equations[e].fit.weights);
    CHECK(back.equations[e].design.x == f.equations[e].design.x);
    CHECK(back.equations[e].fit.scale == f.equations[e].fit.scale);
  }

  MediationFit with_nan = f;
  with_nan.effects(0) = std::nan("");
  const auto j2 = fit_to_json(with_nan, false);
  CHECK(j2["effects"][0]["value"].is_null());
  CHECK(std::isnan(fit_from_json(j2).effects(0)));
}

TEST_CASE("unknown effect names") {
  const auto f = fit("Y ~ m(M1) + X", synthetic(20, 7));
  CHECK_THROWS_AS(f.effect("Indirect[Nope]"), Error);
}

TEST_CASE("estimator settings travel with the fit") {
  FitConfig cfg;
  cfg.mm.tol = 1e-9;
  cfg.mm.max_iter = 321;
  cfg.winsor_quantile = 0.9;
  const auto spec = parse_formula("Y ~ m(M1) + X");
  const auto f = fit_mediation(spec, select_variables(spec, synthetic(30, 8)),
                               Method::RegressionMM, cfg, 1);
  const auto back = fit_from_json(fit_to_json(f, false));
  CHECK(back.config.mm.tol == 1e-9);
  CHECK(back.config.mm.max_iter == 321);
  CHECK(back.config.winsor_quantile == 0.9);
  CHECK(back.config.mm.s.delta == f.config.mm.s.delta);
  CHECK(fit_to_json(f, false)["estimator"]["mm"]["max_iter"] == 321);
}
