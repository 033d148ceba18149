#pragma once

#include "ozmm/types.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <stdexcept>

namespace ozmm {

namespace fp64 {
inline constexpr std::uint64_t kSignMask = 0x8000'0000'0000'0000ull;
inline constexpr std::uint64_t kExpMask = 0x7FF0'0000'0000'0000ull;
inline constexpr std::uint64_t kFracMask = 0x000F'FFFF'FFFF'FFFFull;
inline constexpr int kExpBias = 1023;
inline constexpr int kFracBits = 52;
inline constexpr double kUnitRoundoff = 0x1p-53;
}  // namespace fp64

/// Unit in the first place: 0 for c == 0, otherwise the power of two 2^e
/// with 2^e <= |c| < 2^(e+1). Computed from the exponent field (never via a
/// logarithm); exact for subnormals as well.
inline double ufp(double c) {
  std::uint64_t bits = std::bit_cast<std::uint64_t>(c) & ~fp64::kSignMask;
  if (bits == 0) return 0.0;
  if ((bits & fp64::kExpMask) == fp64::kExpMask)
    throw std::domain_error("ufp: non-finite input");
  if (bits & fp64::kExpMask) return std::bit_cast<double>(bits & fp64::kExpMask);
  // Subnormal: the leading significand bit is the ufp itself.
  return std::bit_cast<double>(std::bit_floor(bits));
}

/// Exponent e of ufp(c) = 2^e. Requires c finite and nonzero.
inline int ufp_exponent(double c) {
  std::uint64_t bits = std::bit_cast<std::uint64_t>(c) & ~fp64::kSignMask;
  const int biased = static_cast<int>(bits >> fp64::kFracBits);
  if (biased > 0) return biased - fp64::kExpBias;
  // Subnormal: the top set fraction bit at position h has value 2^(h-1074).
  return (63 - std::countl_zero(bits)) - 1074;
}

/// Smallest power of two >= alpha (alpha itself when it is a power of two),
/// evaluated as two round-to-nearest FP64 operations: u^-1*a + (1-u^-1)*a.
/// The bit-level route through ufp would work too; this form survives in
/// contexts where only rounded arithmetic is available.
inline double rump_next_pow2(double alpha) {
  if (!(alpha >= 0) || !std::isfinite(alpha))
    throw std::domain_error("rump_next_pow2: negative or non-finite input");
  if (alpha == 0.0) return 0.0;
  const double inv_u = 0x1p53;
  const double p = inv_u * alpha;
  if (!std::isfinite(p))
    throw std::overflow_error("rump_next_pow2: intermediate overflow");
  const double q = (1.0 - inv_u) * alpha;
  return p + q;
}

/// Decomposition |x| = sig * 2^e with sig an integer < 2^53. sig carries the
/// sign of x; sig == 0 iff x == 0 (e is then meaningless). Requires finite x.
struct SigExp {
  std::int64_t sig;
  int exp;
};

inline SigExp decompose(double x) {
  const std::uint64_t bits = std::bit_cast<std::uint64_t>(x);
  const std::uint64_t frac = bits & fp64::kFracMask;
  const int biased = static_cast<int>((bits & fp64::kExpMask) >> fp64::kFracBits);
  std::int64_t sig;
  int exp;
  if (biased == 0) {
    sig = static_cast<std::int64_t>(frac);
    exp = 1 - fp64::kExpBias - fp64::kFracBits;
  } else {
    sig = static_cast<std::int64_t>(frac | (1ull << fp64::kFracBits));
    exp = biased - fp64::kExpBias - fp64::kFracBits;
  }
  return {bits & fp64::kSignMask ? -sig : sig, exp};
}

/// Row/column ufp vectors g_i = ufp(max_j |a_ij|), f_j = ufp(max_i |b_ij|)
/// for a compatible pair (A, B). Zero rows/columns yield 0.
struct UfpVectors {
  VectorF64 g;  // length m, row-wise over A
  VectorF64 f;  // length p, column-wise over B
};

inline UfpVectors ufp_vectors(const MatrixF64& a, const MatrixF64& b) {
  if (a.cols() != b.rows())
    throw std::invalid_argument("ufp_vectors: inner dimensions differ");
  UfpVectors uv;
  uv.g.resize(a.rows());
  for (Index i = 0; i < a.rows(); ++i) uv.g[i] = ufp(a.row(i).cwiseAbs().maxCoeff());
  uv.f.resize(b.cols());
  for (Index j = 0; j < b.cols(); ++j) uv.f[j] = ufp(b.col(j).cwiseAbs().maxCoeff());
  return uv;
}

}  // namespace ozmm
