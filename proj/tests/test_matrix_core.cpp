#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "ozmm/generate.hpp"
#include "ozmm/io.hpp"
#include "ozmm/oracle.hpp"
#include "ozmm/ufp.hpp"

#include <bit>
#include <cmath>
#include <cstdio>
#include <limits>
#include <string>

using namespace ozmm;

namespace {

bool same_bits(double a, double b) {
  return std::bit_cast<std::uint64_t>(a) == std::bit_cast<std::uint64_t>(b);
}

std::string temp_path(const char* name) {
  return std::string("ozmm_test_") + name + ".ozmm";
}

}  // namespace

TEST_CASE("ufp on examples") {
  CHECK(ufp(0.0) == 0.0);
  CHECK(ufp(-0.0) == 0.0);
  CHECK(ufp(5.0) == 4.0);
  CHECK(ufp(-0.75) == 0.5);
  CHECK(ufp(1.0) == 1.0);
  CHECK(ufp(0x1.fffffffffffffp+8) == 256.0);
  CHECK_THROWS_AS(ufp(std::numeric_limits<double>::infinity()), std::domain_error);
  CHECK_THROWS_AS(ufp(std::nan("")), std::domain_error);
}

TEST_CASE("ufp handles subnormals exactly") {
  const double tiny = std::numeric_limits<double>::denorm_min();  // 2^-1074
  CHECK(ufp(tiny) == tiny);
  CHECK(ufp(tiny * 3) == tiny * 2);
  CHECK(ufp(-tiny * 7) == tiny * 4);
  CHECK(ufp_exponent(tiny) == -1074);
  CHECK(ufp_exponent(tiny * 2) == -1073);
}

TEST_CASE("ufp idempotence and bracket over random values") {
  for (int t = 0; t < 20000; ++t) {
    const std::uint64_t h = counter_hash(11, t);
    const int e = static_cast<int>(h % 600) - 300;
    double x = std::ldexp(uniform_open(counter_hash(12, t)) * 2 - 1, e);
    if (x == 0) continue;
    const double u = ufp(x);
    CHECK(ufp(u) == u);
    CHECK(u <= std::abs(x));
    CHECK(std::abs(x) < 2 * u);
    CHECK(std::ldexp(1.0, ufp_exponent(x)) == u);
  }
}

TEST_CASE("rump_next_pow2 examples and agreement with ufp") {
  CHECK(rump_next_pow2(3.0) == 4.0);
  CHECK(rump_next_pow2(4.0) == 4.0);
  CHECK(rump_next_pow2(0.0) == 0.0);
  CHECK(rump_next_pow2(5.0) == 8.0);
  CHECK(rump_next_pow2(0.75) == 1.0);
  CHECK(rump_next_pow2(351.0) == 512.0);
  CHECK_THROWS(rump_next_pow2(0x1p1000));
  for (int t = 0; t < 5000; ++t) {
    const int e = static_cast<int>(counter_hash(13, t) % 400) - 200;
    const double x = std::ldexp(uniform_open(counter_hash(14, t)), e);
    const double expected =
        x == ufp(x) ? x : std::ldexp(ufp(x), 1);  // next power of two
    CHECK(rump_next_pow2(x) == expected);
  }
}

TEST_CASE("ufp_vectors rows and columns") {
  MatrixF64 a(2, 3);
  a << 0.5, -3.0, 2.0, 0.0, 0.0, 0.0;
  MatrixF64 b(3, 2);
  b << 1.0, 0.0, 0.5, 0.0, -0.25, 0.0;
  const UfpVectors uv = ufp_vectors(a, b);
  CHECK(uv.g[0] == 2.0);  // max |.| = 3
  CHECK(uv.g[1] == 0.0);  // zero row
  CHECK(uv.f[0] == 1.0);
  CHECK(uv.f[1] == 0.0);  // zero column

  MatrixF64 single(1, 1);
  single << 1.0;
  const UfpVectors uv1 = ufp_vectors(single, single);
  CHECK(uv1.g[0] == 1.0);
}

TEST_CASE("gen_phi_matrix determinism and phi=0 range") {
  const MatrixF64 a = gen_phi_matrix(17, 23, 0.0, 42);
  const MatrixF64 b = gen_phi_matrix(17, 23, 0.0, 42);
  CHECK(a.rows() == 17);
  REQUIRE(a.size() == b.size());
  for (Index i = 0; i < a.size(); ++i)
    CHECK(same_bits(a.data()[i], b.data()[i]));
  CHECK((a.array() > -0.5).all());
  CHECK((a.array() < 0.5).all());

  const MatrixF64 c = gen_phi_matrix(17, 23, 0.0, 43);
  CHECK((a.array() != c.array()).any());

  CHECK_THROWS_AS(gen_phi_matrix(0, 4, 0.0, 1), std::invalid_argument);
  CHECK_THROWS_AS(gen_phi_matrix(4, 4, -1.0, 1), std::invalid_argument);
}

TEST_CASE("gen_phi_matrix phi=2 dynamic range") {
  // max|a|/min|a| over nonzeros should exceed 1e4 in at least 90% of seeds.
  int hits = 0;
  const int seeds = 20;
  for (int s = 0; s < seeds; ++s) {
    const MatrixF64 a = gen_phi_matrix(256, 256, 2.0, 1000 + s);
    double lo = std::numeric_limits<double>::infinity(), hi = 0;
    for (Index i = 0; i < a.size(); ++i) {
      const double v = std::abs(a.data()[i]);
      if (v == 0) continue;
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    if (hi / lo > 1e4) ++hits;
  }
  CHECK(hits >= seeds * 9 / 10);
}

TEST_CASE("matrix file round trips bit-exactly") {
  const std::string path = temp_path("roundtrip");

  MatrixF64 f(2, 3);
  f << 1.5, -0.0, 0x1p-1074, std::numeric_limits<double>::max(), -3.25, 0.0;
  save_matrix(path, f);
  CHECK(peek_kind(path) == ElementKind::F64);
  const MatrixF64 f2 = load_matrix<double>(path);
  REQUIRE(f2.rows() == f.rows());
  REQUIRE(f2.cols() == f.cols());
  for (Index i = 0; i < f.size(); ++i)
    CHECK(same_bits(f.data()[i], f2.data()[i]));

  MatrixI8 i8(1, 4);
  i8 << -128, 127, 0, -1;
  save_matrix(path, i8);
  CHECK(load_matrix<std::int8_t>(path) == i8);
  CHECK(peek_kind(path) == ElementKind::I8);

  MatrixI32 i32(2, 2);
  i32 << std::numeric_limits<std::int32_t>::min(),
      std::numeric_limits<std::int32_t>::max(), 0, -7;
  save_matrix(path, i32);
  CHECK(load_matrix<std::int32_t>(path) == i32);

  MatrixI64 i64m(1, 2);
  i64m << std::numeric_limits<std::int64_t>::min(), 42;
  save_matrix(path, i64m);
  CHECK(load_matrix<std::int64_t>(path) == i64m);

  std::remove(path.c_str());
}

TEST_CASE("matrix file error paths") {
  const std::string path = temp_path("bad");
  CHECK_THROWS_AS(load_matrix<double>("nonexistent_dir/nope.ozmm"), FormatError);

  MatrixI8 i8 = MatrixI8::Zero(2, 2);
  save_matrix(path, i8);
  CHECK_THROWS_AS(load_matrix<double>(path), FormatError);  // kind mismatch

  {
    std::FILE* fp = std::fopen(path.c_str(), "wb");
    std::fputs("NOPE", fp);
    std::fclose(fp);
  }
  CHECK_THROWS_AS(load_matrix<double>(path), FormatError);
  std::remove(path.c_str());
}

TEST_CASE("max_rel_err examples") {
  MatrixF64 r(2, 2);
  r << 1.0, 2.0, -4.0, 0.0;
  MatrixF64 t = r;
  CHECK(max_rel_err(t, r) == 0.0);

  t(0, 0) = 1.0 + 0x1p-52;  // one ulp at 1.0
  CHECK(max_rel_err(t, r) == 0x1p-52);

  t = r;
  t(1, 0) = -4.0 + 0.5;
  CHECK(max_rel_err(t, r) == doctest::Approx(0.125).epsilon(1e-15));

  // zero-reference entry normalizes by the largest |r|
  t = r;
  t(1, 1) = 1.0;
  CHECK(max_rel_err(t, r) == doctest::Approx(0.25).epsilon(1e-15));

  const MatrixF64 z = MatrixF64::Zero(2, 2);
  CHECK_THROWS_AS(max_rel_err(t, z), std::invalid_argument);
  MatrixF64 wrong(1, 2);
  wrong << 1.0, 2.0;
  CHECK_THROWS_AS(max_rel_err(wrong, r), std::invalid_argument);
}
