#include <cmath>

#include "doctest.h"
#include "frbmed/error.hpp"
#include "frbmed/robust.hpp"

using namespace frbmed;

TEST_CASE("bisquare pieces") {
  const double c = kMMTuning;
  CHECK(bisquare_rho(0.0, c) == 0.0);
  CHECK(bisquare_rho(c + 1.0, c) == doctest::Approx(1.9764989881201667).epsilon(1e-15));
  CHECK(bisquare_rho(c, c) == doctest::Approx(c * c / 6.0).epsilon(1e-14));
  CHECK(bisquare_weight(0.0, c) == 1.0);
  CHECK(bisquare_weight(c, c) == 0.0);
  CHECK(bisquare_weight(5.0, c) == 0.0);
  CHECK(bisquare_psi(-5.0, c) == 0.0);
  for (double x : {-3.0, -1.2, -0.1, 0.4, 2.2, 3.3}) {
    CAPTURE(x);
    CHECK(bisquare_rho(-x, c) == bisquare_rho(x, c));
    CHECK(bisquare_psi(x, c) == doctest::Approx(x * bisquare_weight(x, c)).epsilon(1e-14));
    // psi = rho' and psi' by central differences
    const double h = 1e-6;
    CHECK((bisquare_rho(x + h, c) - bisquare_rho(x - h, c)) / (2 * h) ==
          doctest::Approx(bisquare_psi(x, c)).epsilon(1e-8));
    CHECK((bisquare_psi(x + h, c) - bisquare_psi(x - h, c)) / (2 * h) ==
          doctest::Approx(bisquare_psi_prime(x, c)).epsilon(1e-7));
  }
}

TEST_CASE("consistency constant of the S-scale") {
  const SScaleConfig cfg;
  CHECK(cfg.c_s == 1.54764);
  // Reference value from 30-digit quadrature.
  CHECK(std::abs(cfg.delta - 0.19959963102590807) < 1e-13);
  CHECK(std::abs(cfg.delta - 0.5 * cfg.c_s * cfg.c_s / 6.0) < 1e-4);
  // E[rho] grows to E[Z^2]/2 for large tuning
  CHECK(normal_expected_rho(50.0) == doctest::Approx(0.5).epsilon(1e-3));
}

TEST_CASE("S-scale of a fixed residual vector") {
  Vector r(9);
  r << -2, -1, -0.5, 0, 0.3, 0.8, 1.5, 3, 10;
  const SScaleConfig cfg;
  const auto s = s_scale(r, cfg);
  CHECK_FALSE(s.degenerate);
  CHECK(std::abs(s.scale - 1.6341725710716794) < 1e-9);

  Vector r2 = -3.0 * r;
  CHECK(s_scale(r2, cfg).scale == doctest::Approx(3.0 * s.scale).epsilon(1e-10));
}

TEST_CASE("S-scale with mostly exact zeros is zero") {
  Vector r = Vector::Zero(10);
  r(0) = 1.0;
  r(1) = -2.0;
  const auto s = s_scale(r, SScaleConfig());
  CHECK(s.degenerate);
  CHECK(s.scale == 0.0);
}

TEST_CASE("invalid tuning") {
  CHECK_THROWS_AS(BisquareLoss(-1.0), Error);
  CHECK_THROWS_AS(SScaleConfig(0.0), Error);
}
