// Shared test helpers: an independent arbitrary-precision reference for
// exactly rounded dot products, and seeded random matrices with adjustable
// exponent spread.
#pragma once

#include "ozmm/generate.hpp"
#include "ozmm/types.hpp"
#include "ozmm/ufp.hpp"

#include <boost/multiprecision/cpp_int.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>

namespace testutil {

using ozmm::Index;
using ozmm::MatrixF64;
using boost::multiprecision::cpp_int;

// Correctly rounded dot product via arbitrary-precision integers: all
// products are brought to a common lsb exponent, summed exactly, and rounded
// once by hand. Independent of the library's windowed accumulator.
inline double ref_exact_dot(const double* a, const double* b, Index n) {
  cpp_int total = 0;
  int base = 0;
  bool have = false;
  struct Term {
    cpp_int mag;
    bool neg;
    int exp;
  };
  std::vector<Term> terms;
  for (Index l = 0; l < n; ++l) {
    const auto sa = ozmm::decompose(a[l]);
    const auto sb = ozmm::decompose(b[l]);
    if (sa.sig == 0 || sb.sig == 0) continue;
    Term t;
    t.neg = (sa.sig < 0) != (sb.sig < 0);
    t.mag = cpp_int(std::abs(sa.sig)) * cpp_int(std::abs(sb.sig));
    t.exp = sa.exp + sb.exp;
    if (!have || t.exp < base) base = t.exp;
    have = true;
    terms.push_back(std::move(t));
  }
  if (!have) return 0.0;
  for (const auto& t : terms) {
    cpp_int shifted = t.mag << (t.exp - base);
    if (t.neg)
      total -= shifted;
    else
      total += shifted;
  }
  if (total == 0) return 0.0;
  const bool neg = total < 0;
  cpp_int mag = neg ? -total : total;
  const int msbit = static_cast<int>(boost::multiprecision::msb(mag));
  const int value_exp = base + msbit;
  const int round_exp = std::max(value_exp - 52, -1074);
  const int p = round_exp - base;
  double out;
  if (p <= 0) {
    out = std::ldexp(static_cast<double>(mag), base);
  } else {
    std::uint64_t mant = static_cast<std::uint64_t>(mag >> p);
    const bool guard = boost::multiprecision::bit_test(mag, p - 1);
    const bool sticky = (mag & ((cpp_int(1) << (p - 1)) - 1)) != 0;
    int re = round_exp;
    if (guard && (sticky || (mant & 1))) {
      ++mant;
      if (mant == (1ull << 53)) {
        mant = 1ull << 52;
        ++re;
      }
    }
    if (re > 1023 - 52) return neg ? -std::numeric_limits<double>::infinity()
                                   : std::numeric_limits<double>::infinity();
    out = std::ldexp(static_cast<double>(mant), re);
  }
  return neg ? -out : out;
}

inline MatrixF64 ref_exact_gemm(const MatrixF64& a, const MatrixF64& b) {
  const Index m = a.rows(), n = a.cols(), p = b.cols();
  MatrixF64 bt = b.transpose();
  MatrixF64 c(m, p);
  for (Index i = 0; i < m; ++i)
    for (Index j = 0; j < p; ++j)
      c(i, j) = ref_exact_dot(a.data() + i * n, bt.data() + j * n, n);
  return c;
}

// Random matrix with entries scaled by random powers of two, exercising far
// wider exponent spreads than the phi generator.
inline MatrixF64 random_wild(Index m, Index n, std::uint64_t seed, int max_exp) {
  MatrixF64 a = ozmm::gen_phi_matrix(m, n, 0.0, seed);
  for (Index i = 0; i < m; ++i)
    for (Index j = 0; j < n; ++j) {
      const std::uint64_t h =
          ozmm::counter_hash(seed ^ 0xABCDEF1234567890ull, i * n + j);
      const int e = static_cast<int>(h % (2 * max_exp + 1)) - max_exp;
      a(i, j) = std::ldexp(a(i, j), e);
      if ((h >> 60) == 0) a(i, j) = 0.0;  // sprinkle exact zeros
    }
  return a;
}

}  // namespace testutil
