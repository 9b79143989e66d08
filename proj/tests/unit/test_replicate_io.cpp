#include <cstdio>
#include <cstring>
#include <random>

#include "doctest.h"
#include "frbmed/error.hpp"
#include "frbmed/replicate_io.hpp"

using namespace frbmed;

namespace {

BootstrapResult small_result(Method m, ContrastMode contrast = ContrastMode::None) {
  std::mt19937_64 gen(3);
  std::normal_distribution<double> z;
  std::vector<double> x(40), m1(40), m2(40), y(40);
  for (int i = 0; i < 40; ++i) {
    x[i] = z(gen);
    m1[i] = 0.5 * x[i] + z(gen);
    m2[i] = 0.2 * x[i] + z(gen);
    y[i] = 0.4 * m1[i] + 0.3 * m2[i] + z(gen);
  }
  DataTable t;
  t.add_column("X", x);
  t.add_column("M1", m1);
  t.add_column("M2", m2);
  t.add_column("Y", y);
  const auto spec = parse_formula(m == Method::CovML || m == Method::CovWinsorized
                                      ? "Y ~ m(M1) + X"
                                      : "Y ~ parallel_m(M1, M2) + X");
  BootstrapConfig cfg;
  cfg.R = 50;
  cfg.seed = 77;
  cfg.contrast = contrast;
  return bootstrap_test(spec, select_variables(spec, t), m, cfg, FitConfig{}, 1);
}

ErrorKind kind_of(const std::string& bytes) {
  try {
    decode_replicates(bytes);
  } catch (const Error& e) {
    return e.kind();
  }
  return ErrorKind::NumericFailure;
}

}  // namespace

TEST_CASE("FNV-1a reference vectors") {
  CHECK(fnv1a64("", 0) == 0xcbf29ce484222325ULL);
  CHECK(fnv1a64("a", 1) == 0xaf63dc4c8601ec8cULL);
  CHECK(fnv1a64("foobar", 6) == 0x85944171f73967e8ULL);
}

TEST_CASE("round trip restores the full result") {
  for (Method m : {Method::RegressionMM, Method::RegressionOLS, Method::CovWinsorized}) {
    CAPTURE(to_string(m));
    const auto r = small_result(m, m == Method::CovWinsorized ? ContrastMode::None
                                                               : ContrastMode::Absolute);
    const auto bytes = encode_replicates(r);
    CHECK(std::memcmp(bytes.data(), "FRBMREP\0", 8) == 0);
    const auto back = decode_replicates(bytes);
    CHECK(back.replicates == r.replicates);
    CHECK(back.jackknife == r.jackknife);
    CHECK(back.labels.size() == r.labels.size());
    CHECK(back.discarded == r.discarded);
    REQUIRE(back.coefficient_replicates.size() == r.coefficient_replicates.size());
    for (std::size_t e = 0; e < r.coefficient_replicates.size(); ++e) {
      CHECK(back.coefficient_replicates[e] == r.coefficient_replicates[e]);
    }
    for (std::size_t i = 0; i < r.intervals.size(); ++i) {
      REQUIRE(back.intervals[i].has_value() == r.intervals[i].has_value());
      if (r.intervals[i]) {
        CHECK(back.intervals[i]->lo == r.intervals[i]->lo);
        CHECK(back.intervals[i]->hi == r.intervals[i]->hi);
      }
    }
    CHECK(encode_replicates(back) == bytes);
  }
}

TEST_CASE("damaged files are rejected") {
  const auto bytes = encode_replicates(small_result(Method::RegressionOLS));
  CHECK(kind_of(bytes.substr(0, bytes.size() - 9)) == ErrorKind::CorruptFile);
  CHECK(kind_of(bytes.substr(0, 6)) == ErrorKind::CorruptFile);
  std::string flipped = bytes;
  flipped[bytes.size() / 2] ^= 0x10;
  CHECK(kind_of(flipped) == ErrorKind::CorruptFile);
  std::string magic = bytes;
  magic[0] = 'X';
  CHECK(kind_of(magic) == ErrorKind::CorruptFile);

  std::string newer = bytes;
  const std::uint16_t major = 2;
  std::memcpy(newer.data() + 8, &major, 2);
  CHECK(kind_of(newer) == ErrorKind::VersionMismatch);
}

TEST_CASE("files on disk") {
  const auto r = small_result(Method::RegressionOLS);
  const std::string path = "frbmed_test_replicates.bin";
  save_replicates(r, path);
  CHECK(load_replicates(path).replicates == r.replicates);
  std::remove(path.c_str());
  CHECK_THROWS_AS(load_replicates("does/not/exist.bin"), Error);
}
