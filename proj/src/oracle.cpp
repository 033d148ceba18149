#include "ozmm/oracle.hpp"

#include "ozmm/parallel.hpp"
#include "ozmm/ufp.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <limits>
#include <vector>

namespace ozmm {

namespace {

using u64 = std::uint64_t;
using i64 = std::int64_t;
using u128 = unsigned __int128;
using i128 = __int128;

// ---------------------------------------------------------------------------
// Rounding of an exact magnitude (little-endian u64 limbs, scaled by
// 2^lsb_exp) to the nearest FP64, ties to even.
// ---------------------------------------------------------------------------

int top_bit(const u64* limbs, int nlimbs) {
  for (int t = nlimbs - 1; t >= 0; --t)
    if (limbs[t]) return 64 * t + 63 - std::countl_zero(limbs[t]);
  return -1;
}

u64 bit_range(const u64* limbs, int nlimbs, int pos, int count) {
  // Value of bits [pos, pos+count), count <= 63. Bits outside the array are 0.
  u64 out = 0;
  for (int t = 0; t < count; ++t) {
    const int p = pos + t;
    if (p < 0 || p >= 64 * nlimbs) continue;
    out |= ((limbs[p >> 6] >> (p & 63)) & 1ull) << t;
  }
  return out;
}

bool any_bit_below(const u64* limbs, int nlimbs, int pos) {
  if (pos <= 0) return false;
  const int full = std::min(pos >> 6, nlimbs);
  for (int t = 0; t < full; ++t)
    if (limbs[t]) return true;
  if ((pos >> 6) < nlimbs && (pos & 63))
    return (limbs[pos >> 6] & ((1ull << (pos & 63)) - 1)) != 0;
  return false;
}

// Rounds magnitude * 2^lsb_exp. Returns false on FP64 overflow.
bool round_magnitude(const u64* limbs, int nlimbs, int lsb_exp, bool negative,
                     double* out) {
  const int msb = top_bit(limbs, nlimbs);
  if (msb < 0) {
    *out = 0.0;
    return true;
  }
  const int value_exp = lsb_exp + msb;  // value in [2^value_exp, 2^(value_exp+1))
  // Position of the kept lsb, floored at the subnormal grid.
  const int round_exp = std::max(value_exp - 52, -1074);
  const int p = round_exp - lsb_exp;
  double mag;
  if (p <= 0) {
    // Everything fits in <= 53 significant bits; exact.
    mag = std::ldexp(static_cast<double>(bit_range(limbs, nlimbs, 0, msb + 1)),
                     lsb_exp);
  } else {
    u64 mant = bit_range(limbs, nlimbs, p, msb - p + 1);
    const bool guard = bit_range(limbs, nlimbs, p - 1, 1) != 0;
    const bool sticky = any_bit_below(limbs, nlimbs, p - 1);
    int re = round_exp;
    if (guard && (sticky || (mant & 1))) {
      ++mant;
      if (mant == (1ull << 53)) {
        mant = 1ull << 52;
        ++re;
      }
    }
    if (re > 1023 - 52) return false;
    mag = std::ldexp(static_cast<double>(mant), re);
  }
  if (std::isinf(mag)) return false;
  *out = negative ? -mag : mag;
  return true;
}

// ---------------------------------------------------------------------------
// Wide accumulator: signed digits in base 2^32 held in int64 limbs, covering
// one dot product's exponent window. Digit adds never carry during
// accumulation (|digit| < 2^32, counts <= 2^29), so a single normalization
// pass at the end suffices.
// ---------------------------------------------------------------------------

constexpr int kMaxDigits = 150;

struct DigitWindow {
  i64 digits[kMaxDigits];
  int base_exp = 0;  // bit exponent of digit 0's lsb
  int ndigits = 0;

  void reset(int emin, int emax) {
    base_exp = (emin >> 5) * 32;  // arithmetic floor to a digit boundary
    ndigits = ((emax + 107 + 40) - base_exp) / 32 + 1;
    if (ndigits > kMaxDigits) ndigits = kMaxDigits;
    std::memset(digits, 0, sizeof(i64) * ndigits);
  }

  void add(i128 prod, int exp) {
    const bool neg = prod < 0;
    u128 mag = neg ? static_cast<u128>(-prod) : static_cast<u128>(prod);
    const int off = exp - base_exp;
    int d = off >> 5;
    const int r = off & 31;
    u64 carry = 0;
    for (int t = 0; t < 5; ++t) {
      const u64 g = t < 4 ? static_cast<u64>((mag >> (32 * t)) & 0xFFFFFFFFu) : 0;
      const u64 cur = (g << r) | carry;
      carry = cur >> 32;
      const i64 piece = static_cast<i64>(cur & 0xFFFFFFFFu);
      if (piece) digits[d + t] += neg ? -piece : piece;
    }
  }

  // Normalizes into a sign and u64 limbs; returns lsb exponent via *lsb.
  bool to_magnitude(u64* limbs, int* nlimbs, int* lsb) const {
    i64 work[kMaxDigits];
    std::memcpy(work, digits, sizeof(i64) * ndigits);
    i64 carry = 0;
    for (int t = 0; t < ndigits; ++t) {
      const i64 s = work[t] + carry;
      work[t] = s & 0xFFFFFFFF;
      carry = s >> 32;
    }
    bool negative = carry < 0;
    if (negative) {
      // Total is negative: negate the canonical digit string.
      i64 borrow = 1;
      for (int t = 0; t < ndigits; ++t) {
        const i64 s = (~work[t] & 0xFFFFFFFF) + borrow;
        work[t] = s & 0xFFFFFFFF;
        borrow = s >> 32;
      }
    }
    const int nl = (ndigits + 1) / 2;
    for (int t = 0; t < nl; ++t) {
      const u64 lo = static_cast<u64>(work[2 * t]);
      const u64 hi = 2 * t + 1 < ndigits ? static_cast<u64>(work[2 * t + 1]) : 0;
      limbs[t] = lo | (hi << 32);
    }
    *nlimbs = nl;
    *lsb = base_exp;
    return negative;
  }
};

// ---------------------------------------------------------------------------

struct PreparedMatrix {
  std::vector<i64> sig;   // signed significands, zero for zero entries
  std::vector<int> exp;   // lsb exponents (meaningless where sig == 0)
  std::vector<int> line_max;  // per row (A) or column (B): max msb bound
  Index rows = 0, cols = 0;
};

// Splits every entry of m into significand/exponent form. When transpose is
// set the output is stored column-major so that one output line is
// contiguous either way.
PreparedMatrix prepare(const MatrixF64& m, bool transpose, const char* who) {
  PreparedMatrix out;
  const Index lines = transpose ? m.cols() : m.rows();
  const Index len = transpose ? m.rows() : m.cols();
  out.rows = lines;
  out.cols = len;
  out.sig.resize(lines * len);
  out.exp.resize(lines * len);
  out.line_max.assign(lines, std::numeric_limits<int>::min());
  for (Index i = 0; i < lines; ++i) {
    for (Index l = 0; l < len; ++l) {
      const double v = transpose ? m(l, i) : m(i, l);
      if (!std::isfinite(v))
        throw std::invalid_argument(std::string(who) + ": non-finite entry");
      const SigExp se = decompose(v);
      out.sig[i * len + l] = se.sig;
      out.exp[i * len + l] = se.exp;
      if (se.sig != 0)
        out.line_max[i] = std::max(out.line_max[i], se.exp + 54);
    }
    if (out.line_max[i] == std::numeric_limits<int>::min())
      out.line_max[i] = 0;  // all-zero line; every product vanishes anyway
  }
  return out;
}

// One exactly accumulated dot product, correctly rounded once.
double exact_dot(const i64* sa, const int* ea, const i64* sb, const int* eb,
                 Index n, int msb_bound, Index i, Index j, DigitWindow& scratch) {
  // Optimistic pass: a 192-bit two's-complement window anchored right below
  // the msb bound, with headroom for n-term carries. Falls back to the wide
  // accumulator when any product reaches below the window.
  const int head = 2 + std::bit_width(static_cast<u64>(n));
  const int lsb_base = msb_bound + head - 191;
  u64 acc0 = 0, acc1 = 0, acc2 = 0;
  bool ok = true;
  int emin = std::numeric_limits<int>::max();
  int emax = std::numeric_limits<int>::min();
  for (Index l = 0; l < n; ++l) {
    if (sa[l] == 0 || sb[l] == 0) continue;
    const int e = ea[l] + eb[l];
    emin = std::min(emin, e);
    emax = std::max(emax, e);
    if (!ok) continue;  // keep scanning the window for the fallback
    const int sh = e - lsb_base;
    if (sh < 0) {
      ok = false;
      continue;
    }
    const i128 prod = static_cast<i128>(sa[l]) * sb[l];
    const u64 x0 = static_cast<u64>(static_cast<u128>(prod));
    const u64 x1 = static_cast<u64>(static_cast<u128>(prod) >> 64);
    const u64 x2 = prod < 0 ? ~0ull : 0ull;
    const int b = sh & 63;
    // 192-bit left shift by b (< 64); bits above the window are sign fill.
    const u64 y0 = x0 << b;
    const u64 y1 = (x1 << b) | ((x0 >> (63 - b)) >> 1);
    const u64 y2 = (x2 << b) | ((x1 >> (63 - b)) >> 1);
    u64 z0 = y0, z1 = y1, z2 = y2;
    switch (sh >> 6) {
      case 0: break;
      case 1: z2 = z1; z1 = z0; z0 = 0; break;
      default: z2 = z0; z1 = 0; z0 = 0; break;
    }
    const u64 c1 = __builtin_add_overflow(acc0, z0, &acc0) ? 1 : 0;
    const u64 c2 = __builtin_add_overflow(acc1, z1, &acc1) ? 1 : 0;
    const u64 c3 = __builtin_add_overflow(acc1, c1, &acc1) ? 1 : 0;
    acc2 += z2 + c2 + c3;
  }
  if (emax == std::numeric_limits<int>::min()) return 0.0;

  u64 limbs[kMaxDigits / 2 + 1];
  int nlimbs, lsb;
  bool negative;
  if (ok) {
    negative = (acc2 >> 63) != 0;
    if (negative) {
      acc0 = ~acc0;
      acc1 = ~acc1;
      acc2 = ~acc2;
      if (++acc0 == 0 && ++acc1 == 0) ++acc2;
    }
    limbs[0] = acc0;
    limbs[1] = acc1;
    limbs[2] = acc2;
    nlimbs = 3;
    lsb = lsb_base;
  } else {
    scratch.reset(emin, emax);
    for (Index l = 0; l < n; ++l) {
      if (sa[l] == 0 || sb[l] == 0) continue;
      scratch.add(static_cast<i128>(sa[l]) * sb[l], ea[l] + eb[l]);
    }
    negative = scratch.to_magnitude(limbs, &nlimbs, &lsb);
  }
  double out;
  if (!round_magnitude(limbs, nlimbs, lsb, negative, &out))
    throw GemmOverflowError(i, j);
  return out;
}

}  // namespace

MatrixF64 exact_gemm_oracle(const MatrixF64& a, const MatrixF64& b) {
  if (a.cols() != b.rows())
    throw std::invalid_argument("exact_gemm_oracle: inner dimensions differ");
  const Index m = a.rows(), n = a.cols(), p = b.cols();
  const PreparedMatrix pa = prepare(a, false, "exact_gemm_oracle A");
  const PreparedMatrix pb = prepare(b, true, "exact_gemm_oracle B");

  MatrixF64 c(m, p);
#pragma omp parallel num_threads(thread_count())
  {
    DigitWindow scratch;
#pragma omp for schedule(dynamic, 1)
    for (Index i = 0; i < m; ++i) {
      const i64* sa = pa.sig.data() + i * n;
      const int* ea = pa.exp.data() + i * n;
      for (Index j = 0; j < p; ++j) {
        const i64* sb = pb.sig.data() + j * n;
        const int* eb = pb.exp.data() + j * n;
        const int bound = pa.line_max[i] + pb.line_max[j];
        c(i, j) = exact_dot(sa, ea, sb, eb, n, bound, i, j, scratch);
      }
    }
  }
  return c;
}

MatrixF64 fp64_gemm_reference(const MatrixF64& a, const MatrixF64& b) {
  if (a.cols() != b.rows())
    throw std::invalid_argument("fp64_gemm_reference: inner dimensions differ");
  const Index m = a.rows(), n = a.cols(), p = b.cols();
  MatrixF64 bt = b.transpose();
  MatrixF64 c(m, p);
#pragma omp parallel for schedule(static) num_threads(thread_count())
  for (Index i = 0; i < m; ++i) {
    for (Index j = 0; j < p; ++j) {
      double s = 0.0;
      const double* ar = a.data() + i * n;
      const double* br = bt.data() + j * n;
      for (Index l = 0; l < n; ++l) s += ar[l] * br[l];
      c(i, j) = s;
    }
  }
  return c;
}

double max_rel_err(const MatrixF64& t, const MatrixF64& r) {
  if (t.rows() != r.rows() || t.cols() != r.cols())
    throw std::invalid_argument("max_rel_err: shape mismatch");
  const double rmax = r.cwiseAbs().maxCoeff();
  if (rmax == 0.0) throw std::invalid_argument("max_rel_err: all-zero reference");
  double worst = 0.0;
  for (Index i = 0; i < t.rows(); ++i)
    for (Index j = 0; j < t.cols(); ++j) {
      const double rv = r(i, j);
      const double e = rv != 0.0 ? std::abs(t(i, j) - rv) / std::abs(rv)
                                 : std::abs(t(i, j)) / rmax;
      worst = std::max(worst, e);
    }
  return worst;
}

}  // namespace ozmm
