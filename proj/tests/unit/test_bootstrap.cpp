#include <algorithm>
#include <cmath>
#include <random>

#include "doctest.h"
#include "frbmed/bootstrap.hpp"
#include "frbmed/error.hpp"

using namespace frbmed;

namespace {

DataTable synthetic(int n, std::uint32_t seed, int outliers = 0) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> z;
  std::vector<double> x(n), m1(n), m2(n), m3(n), y(n);
  for (int i = 0; i < n; ++i) {
    x[i] = z(gen);
    m1[i] = 0.5 * x[i] + z(gen);
    m2[i] = 0.3 * x[i] + z(gen);
    m3[i] = 0.4 * x[i] + z(gen);
    y[i] = 0.4 * m1[i] + 0.2 * m2[i] + 0.1 * m3[i] + 0.2 * x[i] + z(gen);
  }
  for (int i = 0; i < outliers; ++i) {
    y[i] += 12.0;
    m1[i] -= 6.0;
  }
  DataTable t;
  t.add_column("X", x);
  t.add_column("M1", m1);
  t.add_column("M2", m2);
  t.add_column("M3", m3);
  t.add_column("Y", y);
  return t;
}

BootstrapResult boot(const std::string& formula, const DataTable& t, Method m, BootstrapConfig cfg,
                     unsigned threads = 1) {
  const auto spec = parse_formula(formula);
  return bootstrap_test(spec, select_variables(spec, t), m, cfg, FitConfig{}, threads);
}

const std::vector<double> kBcaFixture = {0.12, -0.05, 0.33, 0.21, 0.08, 0.45, 0.27,
                                         0.15, 0.02,  0.39, 0.18, 0.24, 0.31, -0.11,
                                         0.09, 0.56,  0.29, 0.13, 0.2};

}  // namespace

TEST_CASE("resampling is deterministic and uniform") {
  CHECK(replicate_indices(50, 9, 3) == replicate_indices(50, 9, 3));
  CHECK(replicate_indices(50, 9, 3) != replicate_indices(50, 9, 4));
  CHECK(replicate_indices(50, 9, 3) != replicate_indices(50, 10, 3));
  CHECK(replicate_indices(50, 9, 3, 1) != replicate_indices(50, 9, 3, 0));
  const auto all = resample_indices(50, 20, 9);
  REQUIRE(all.size() == 20);
  CHECK(all[3] == replicate_indices(50, 9, 3));

  // n = 2: both draws equal with probability 1/2.
  std::size_t same = 0;
  const std::size_t R = 20000;
  for (const auto& idx : resample_indices(2, R, 1)) same += idx[0] == idx[1];
  const double frac = static_cast<double>(same) / static_cast<double>(R);
  CHECK(std::abs(frac - 0.5) < 4.0 * std::sqrt(0.25 / R));

  std::vector<std::size_t> counts(10, 0);
  for (const auto& idx : resample_indices(10, 5000, 2)) {
    for (auto i : idx) {
      REQUIRE(i < 10);
      ++counts[i];
    }
  }
  for (auto c : counts) CHECK(std::abs(static_cast<double>(c) - 5000.0) < 4.0 * std::sqrt(4500.0));
}

TEST_CASE("FRB replicate of the original sample is the MM estimate") {
  const auto t = synthetic(60, 11, 4);
  const Eigen::Index n = 60;
  Matrix x(n, 2);
  x.col(0).setOnes();
  x.col(1) = Eigen::Map<const Vector>(t.find("X")->values.data(), n);
  const Vector y = Eigen::Map<const Vector>(t.find("Y")->values.data(), n);
  const auto fit = fit_mm_regression(x, y, MMConfig{}, 3);
  const auto pre = frb_precompute(x, fit, kMMTuning);
  std::vector<std::size_t> idx(static_cast<std::size_t>(n));
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  CHECK((frb_replicate(x, y, idx, pre) - fit.coefficients).norm() < 1e-8);

  // Downweighted outliers have zero weight, so dropping them changes nothing
  // in the WLS step.
  for (int i = 0; i < 4; ++i) CHECK(fit.weights(i) < 1e-12);
  std::vector<std::size_t> kept(idx.begin() + 4, idx.end());
  CHECK((frb_replicate(x, y, kept, pre) - fit.coefficients).norm() < 1e-8);
}

TEST_CASE("FRB correction is the identity at zero scale") {
  Matrix x(6, 2);
  x << 1, 0, 1, 1, 1, 2, 1, 3, 1, 4, 1, 5;
  RegressionFit f;
  f.coefficients = Vector::Zero(2);
  f.scale = 0.0;
  f.weights = Vector::Ones(6);
  f.residuals = Vector::Zero(6);
  const auto pre = frb_precompute(x, f, kMMTuning);
  CHECK(pre.correction.isApprox(Matrix::Identity(2, 2)));
}

TEST_CASE("BCa fixture") {
  BcaDetail d;
  const auto iv = bca_interval(kBcaFixture, 0.17, 0.05, 0.9, &d);
  CHECK(d.z0 == doctest::Approx(-0.199201324789267).epsilon(1e-12));
  CHECK(d.alpha_lo == doctest::Approx(0.029540986443177864).epsilon(1e-12));
  CHECK(d.alpha_hi == doctest::Approx(0.9129406825208255).epsilon(1e-12));
  CHECK(iv.lo == doctest::Approx(-0.0780957346413679).epsilon(1e-12));
  CHECK(iv.hi == doctest::Approx(0.41597593712249165).epsilon(1e-12));

  const auto pc = percentile_interval(kBcaFixture, 0.9);
  CHECK(pc.lo == doctest::Approx(-0.056).epsilon(1e-12));
  CHECK(pc.hi == doctest::Approx(0.461).epsilon(1e-12));

  // Zero bias and acceleration reduce BCa to the percentile interval.
  std::vector<double> sym;
  for (int i = -50; i <= 50; ++i) sym.push_back(0.01 * i);
  const auto b0 = bca_interval(sym, 0.0, 0.0, 0.95);
  const auto p0 = percentile_interval(sym, 0.95);
  CHECK(b0.lo == doctest::Approx(p0.lo).epsilon(1e-12));
  CHECK(b0.hi == doctest::Approx(p0.hi).epsilon(1e-12));
}

TEST_CASE("jackknife acceleration") {
  CHECK(jackknife_acceleration({1, 2, 3, 4, 10}) ==
        doctest::Approx(-0.08485281374238571).epsilon(1e-13));
  CHECK(jackknife_acceleration({2, 2, 2, 2}) == 0.0);
  CHECK(jackknife_acceleration({-1, 0, 1}) == doctest::Approx(0.0));
}

TEST_CASE("Sobel fixtures") {
  struct Case {
    double a, sa, b, sb, se, z, p;
  };
  const Case cases[] = {
      {2, 0.5, 3, 1, 2.5, 2.4, 0.016395071849192262},
      {0.4, 0.1, -0.3, 0.05, 0.0360555127546399, -3.3282011773513744, 0.0008740872112984741},
      {-1.5, 0.7, 2.2, 0.9, 2.0479501947068925, -1.6113673118267917, 0.10709968749511732},
  };
  for (const auto& c : cases) {
    const auto s = sobel_from(c.a, c.sa, c.b, c.sb, SobelOrder::First);
    CHECK(s.estimate == doctest::Approx(c.a * c.b).epsilon(1e-15));
    CHECK(s.std_error == doctest::Approx(c.se).epsilon(1e-13));
    CHECK(s.z == doctest::Approx(c.z).epsilon(1e-13));
    CHECK(s.p == doctest::Approx(c.p).epsilon(1e-12));
    const auto s2 = sobel_from(c.a, c.sa, c.b, c.sb, SobelOrder::Second);
    CHECK(s2.std_error ==
          doctest::Approx(std::sqrt(c.se * c.se + c.sa * c.sa * c.sb * c.sb)).epsilon(1e-13));
  }
  const auto zero = sobel_from(0.0, 0.0, 0.0, 0.0, SobelOrder::First);
  CHECK(zero.z == 0.0);
  CHECK(zero.p == 1.0);
  CHECK_THROWS_AS(sobel_from(1.0, 0.0, 1.0, 0.0, SobelOrder::First), Error);
}

TEST_CASE("bootstrap z-test") {
  std::vector<double> col;
  for (int i = 0; i < 1000; ++i) col.push_back(i % 2 == 0 ? 1.0 : 3.0);
  const auto zt = z_test_column("b", 2.0, col);
  CHECK(zt.boot == doctest::Approx(2.0));
  CHECK(zt.z == doctest::Approx(2.0 / zt.sd).epsilon(1e-14));
  CHECK(zt.p == doctest::Approx(std::erfc(zt.z / std::sqrt(2.0))).epsilon(1e-12));
  CHECK(z_test_column("b", 2.0, std::vector<double>(10, 0.0)).zero_variance);
}

TEST_CASE("z-test p at z = 2") {
  // Mean 2, sample SD 1.
  std::vector<double> col2 = {2.0 - std::sqrt(0.5), 2.0 + std::sqrt(0.5)};
  const auto z2 = z_test_column("x", 2.0, col2);
  CHECK(z2.sd == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(z2.p == doctest::Approx(0.04550026389635839).epsilon(1e-12));
}

TEST_CASE("bootstrap runs are reproducible across thread counts") {
  const auto t = synthetic(40, 21, 2);
  BootstrapConfig cfg;
  cfg.R = 60;
  cfg.seed = 42;
  const auto a = boot("Y ~ m(M1) + X", t, Method::RegressionMM, cfg, 1);
  const auto b = boot("Y ~ m(M1) + X", t, Method::RegressionMM, cfg, 3);
  CHECK(a.replicates == b.replicates);
  CHECK(a.jackknife == b.jackknife);
  REQUIRE(a.intervals[a.label_index("Indirect[M1]")].has_value());
  CHECK(a.intervals[a.label_index("Indirect[M1]")]->lo ==
        b.intervals[b.label_index("Indirect[M1]")]->lo);
  cfg.seed = 43;
  const auto c = boot("Y ~ m(M1) + X", t, Method::RegressionMM, cfg, 1);
  CHECK(a.replicates != c.replicates);
}

TEST_CASE("OLS bootstrap replicates are refits on the resampled rows") {
  const auto t = synthetic(30, 22);
  BootstrapConfig cfg;
  cfg.R = 5;
  cfg.seed = 5;
  const auto r = boot("Y ~ m(M1) + X", t, Method::RegressionOLS, cfg);
  const auto spec = parse_formula("Y ~ m(M1) + X");
  for (std::size_t k = 0; k < cfg.R; ++k) {
    const auto idx = replicate_indices(30, cfg.seed, k);
    DataTable sub;
    for (const char* name : {"X", "M1", "Y"}) {
      std::vector<double> v;
      for (auto i : idx) v.push_back(t.find(name)->values[i]);
      sub.add_column(name, v);
    }
    const auto f = fit_mediation(spec, select_variables(spec, sub), Method::RegressionOLS, {}, 1);
    for (Eigen::Index e = 0; e < f.effects.size(); ++e) {
      CHECK(r.replicates(static_cast<Eigen::Index>(k), e) ==
            doctest::Approx(f.effects(e)).epsilon(1e-10));
    }
  }
}

TEST_CASE("contrasts and retest") {
  const auto t = synthetic(50, 23);
  BootstrapConfig cfg;
  cfg.R = 200;
  cfg.seed = 7;
  cfg.ci_type = CiType::Percentile;
  const auto base = boot("Y ~ parallel_m(M1, M2, M3) + X", t, Method::RegressionOLS, cfg);
  CHECK(base.labels.size() == base.base_label_count);

  RetestSettings s;
  s.contrast = ContrastMode::Estimates;
  const auto withc = retest(base, s);
  REQUIRE(withc.labels.size() == base.base_label_count + 3);
  const auto i12 = withc.label_index("Contrast1");
  const auto c12 = withc.column(i12);
  const auto m1 = withc.column(withc.label_index("Indirect[M1]"));
  const auto m2 = withc.column(withc.label_index("Indirect[M2]"));
  for (std::size_t k = 0; k < c12.size(); ++k) CHECK(c12[k] == doctest::Approx(m1[k] - m2[k]));

  s.contrast = ContrastMode::Absolute;
  s.contrast_labels = std::vector<std::string>{"M1", "M3"};
  const auto abs = retest(base, s);
  REQUIRE(abs.labels.size() == base.base_label_count + 1);
  const auto ca = abs.column(abs.label_index("Contrast"));
  const auto m3 = abs.column(abs.label_index("Indirect[M3]"));
  for (std::size_t k = 0; k < ca.size(); ++k) {
    CHECK(ca[k] == doctest::Approx(std::abs(m1[k]) - std::abs(m3[k])));
  }

  s = {};
  s.contrast_labels = std::vector<std::string>{"M1"};
  s.contrast = ContrastMode::Estimates;
  CHECK_THROWS_AS(retest(base, s), Error);

  // Retesting to BCa matches a fresh BCa run.
  RetestSettings to_bca;
  to_bca.ci_type = CiType::BCa;
  to_bca.level = 0.9;
  const auto rb = retest(base, to_bca);
  cfg.ci_type = CiType::BCa;
  cfg.level = 0.9;
  const auto fresh = boot("Y ~ parallel_m(M1, M2, M3) + X", t, Method::RegressionOLS, cfg);
  for (std::size_t i = 0; i < fresh.labels.size(); ++i) {
    if (!fresh.intervals[i]) continue;
    CHECK(rb.intervals[i]->lo == fresh.intervals[i]->lo);
    CHECK(rb.intervals[i]->hi == fresh.intervals[i]->hi);
  }
}

TEST_CASE("p value is consistent with the interval") {
  const auto t = synthetic(60, 24);
  BootstrapConfig cfg;
  cfg.R = 400;
  cfg.seed = 8;
  const auto r = boot("Y ~ parallel_m(M1, M2) + X", t, Method::RegressionOLS, cfg);
  for (const char* label : {"Indirect[M1]", "Indirect[M2]"}) {
    CAPTURE(label);
    const double p = p_value(r, label);
    CHECK(p >= 0.0);
    CHECK(p <= 1.0);
    const auto idx = r.label_index(label);
    for (double level : {0.8, 0.9, 0.95, 0.99}) {
      const auto iv = label_interval(r, idx, level);
      const bool excludes = iv.lo > 0.0 || iv.hi < 0.0;
      if (p < 1.0 - level - 1e-3) CHECK(excludes);
      if (p > 1.0 - level + 1e-3) CHECK_FALSE(excludes);
    }
  }
}

TEST_CASE("config validation") {
  BootstrapConfig cfg;
  cfg.R = 1;
  CHECK_THROWS_AS(validate(cfg), Error);
  cfg.R = 10;
  cfg.level = 0.4;
  CHECK_THROWS_AS(validate(cfg), Error);
  cfg.level = 1.0;
  CHECK_THROWS_AS(validate(cfg), Error);
  cfg.level = 0.95;
  CHECK_NOTHROW(validate(cfg));
  CHECK(ci_type_from_string("perc") == CiType::Percentile);
  CHECK(contrast_mode_from_string("absolute") == ContrastMode::Absolute);
}
