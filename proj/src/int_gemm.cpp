#include "ozmm/int_gemm.hpp"

#include "ozmm/parallel.hpp"

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstdlib>
#include <cstring>
#include <limits>
#include <vector>

#if defined(__x86_64__)
#include <immintrin.h>
#define OZMM_X86 1
#endif

namespace ozmm {

namespace {

using i64 = std::int64_t;

// A group of at most r slice products never exceeds r * n * 127^2 <= 2^31,
// so a 64-bit accumulator has ample headroom for any supported shape.
static_assert(sizeof(i64) * 8 >= 64);

void check_shapes(const MatrixI8& a, const MatrixI8& b) {
  if (a.cols() != b.rows())
    throw std::invalid_argument("i8_gemm: inner dimensions differ");
}

// ---------------------------------------------------------------------------
// Exact path with 64-bit accumulation and per-entry overflow handling.
// ---------------------------------------------------------------------------

void gemm_wide(const MatrixI32& cin, const MatrixI8& a, const MatrixI8& b,
               OverflowMode mode, MatrixI32& out) {
  const Index m = a.rows(), n = a.cols(), p = b.cols();
  MatrixI8 bt = b.transpose();
#pragma omp parallel for schedule(static) num_threads(thread_count())
  for (Index i = 0; i < m; ++i) {
    const std::int8_t* ar = a.data() + i * n;
    for (Index j = 0; j < p; ++j) {
      const std::int8_t* br = bt.data() + j * n;
      i64 s = cin(i, j);
      for (Index l = 0; l < n; ++l)
        s += static_cast<i64>(ar[l]) * br[l];
      if (s < std::numeric_limits<std::int32_t>::min() ||
          s > std::numeric_limits<std::int32_t>::max()) {
        if (mode == OverflowMode::Checked) throw OverflowError(i, j, s);
        out(i, j) = static_cast<std::int32_t>(
            static_cast<std::uint32_t>(static_cast<std::uint64_t>(s)));
      } else {
        out(i, j) = static_cast<std::int32_t>(s);
      }
    }
  }
}

// ---------------------------------------------------------------------------
// Fast path: INT16-pair kernels accumulating in INT32. Only used when a
// prior bound shows no entry can leave the INT32 range, so the narrower
// accumulator is observationally identical to the wide one.
// ---------------------------------------------------------------------------

struct PackedPairs {
  std::vector<std::int32_t> a;  // m x n2 pairs of A entries widened to int16
  Index n2 = 0;
};

PackedPairs pack_a_pairs(const MatrixI8& a) {
  const Index m = a.rows(), n = a.cols();
  PackedPairs out;
  out.n2 = (n + 1) / 2;
  out.a.resize(m * out.n2);
  for (Index i = 0; i < m; ++i) {
    const std::int8_t* src = a.data() + i * n;
    std::int32_t* dst = out.a.data() + i * out.n2;
    for (Index l2 = 0; l2 < out.n2; ++l2) {
      const std::int16_t lo = src[2 * l2];
      const std::int16_t hi = 2 * l2 + 1 < n ? src[2 * l2 + 1] : 0;
      dst[l2] = static_cast<std::int32_t>(static_cast<std::uint16_t>(lo)) |
                (static_cast<std::int32_t>(hi) << 16);
    }
  }
  return out;
}

#ifdef OZMM_X86

__attribute__((target("avx512f,avx512bw,avx512vnni"))) void vnni_flush_row(
    std::int32_t* c, __mmask16 m0, __mmask16 m1, __m512i lo, __m512i hi) {
  __m512i cur0 = _mm512_maskz_loadu_epi32(m0, c);
  _mm512_mask_storeu_epi32(c, m0, _mm512_add_epi32(cur0, lo));
  if (m1) {
    __m512i cur1 = _mm512_maskz_loadu_epi32(m1, c + 16);
    _mm512_mask_storeu_epi32(c + 16, m1, _mm512_add_epi32(cur1, hi));
  }
}

__attribute__((target("avx512f,avx512bw,avx512vnni"))) void vnni_strip(
    const std::int32_t* apack, Index n2, const MatrixI8& b, Index jb, Index jw,
    MatrixI32& out, Index m) {
  const Index n = b.rows(), p = b.cols();
  // Pack the B strip as int16 pairs, zero-padded to 32 columns.
  std::vector<std::int32_t> bpack(n2 * 32, 0);
  for (Index l2 = 0; l2 < n2; ++l2) {
    const std::int8_t* r0 = b.data() + (2 * l2) * p;
    const std::int8_t* r1 = 2 * l2 + 1 < n ? b.data() + (2 * l2 + 1) * p : nullptr;
    std::int32_t* dst = bpack.data() + l2 * 32;
    for (Index t = 0; t < jw; ++t) {
      const std::int16_t lo = r0[jb + t];
      const std::int16_t hi = r1 ? r1[jb + t] : 0;
      dst[t] = static_cast<std::int32_t>(static_cast<std::uint16_t>(lo)) |
               (static_cast<std::int32_t>(hi) << 16);
    }
  }
  const __mmask16 m0 = jw >= 16 ? 0xFFFF : static_cast<__mmask16>((1u << jw) - 1);
  const __mmask16 m1 =
      jw >= 32 ? 0xFFFF
               : (jw > 16 ? static_cast<__mmask16>((1u << (jw - 16)) - 1) : 0);

  Index i = 0;
  for (; i + 4 <= m; i += 4) {
    __m512i acc00 = _mm512_setzero_si512(), acc01 = _mm512_setzero_si512();
    __m512i acc10 = _mm512_setzero_si512(), acc11 = _mm512_setzero_si512();
    __m512i acc20 = _mm512_setzero_si512(), acc21 = _mm512_setzero_si512();
    __m512i acc30 = _mm512_setzero_si512(), acc31 = _mm512_setzero_si512();
    const std::int32_t* a0 = apack + (i + 0) * n2;
    const std::int32_t* a1 = apack + (i + 1) * n2;
    const std::int32_t* a2 = apack + (i + 2) * n2;
    const std::int32_t* a3 = apack + (i + 3) * n2;
    for (Index l2 = 0; l2 < n2; ++l2) {
      const __m512i b0 = _mm512_loadu_si512(bpack.data() + l2 * 32);
      const __m512i b1 = _mm512_loadu_si512(bpack.data() + l2 * 32 + 16);
      const __m512i va0 = _mm512_set1_epi32(a0[l2]);
      const __m512i va1 = _mm512_set1_epi32(a1[l2]);
      const __m512i va2 = _mm512_set1_epi32(a2[l2]);
      const __m512i va3 = _mm512_set1_epi32(a3[l2]);
      acc00 = _mm512_dpwssd_epi32(acc00, va0, b0);
      acc01 = _mm512_dpwssd_epi32(acc01, va0, b1);
      acc10 = _mm512_dpwssd_epi32(acc10, va1, b0);
      acc11 = _mm512_dpwssd_epi32(acc11, va1, b1);
      acc20 = _mm512_dpwssd_epi32(acc20, va2, b0);
      acc21 = _mm512_dpwssd_epi32(acc21, va2, b1);
      acc30 = _mm512_dpwssd_epi32(acc30, va3, b0);
      acc31 = _mm512_dpwssd_epi32(acc31, va3, b1);
    }
    vnni_flush_row(out.data() + (i + 0) * p + jb, m0, m1, acc00, acc01);
    vnni_flush_row(out.data() + (i + 1) * p + jb, m0, m1, acc10, acc11);
    vnni_flush_row(out.data() + (i + 2) * p + jb, m0, m1, acc20, acc21);
    vnni_flush_row(out.data() + (i + 3) * p + jb, m0, m1, acc30, acc31);
  }
  for (; i < m; ++i) {
    __m512i acc0 = _mm512_setzero_si512(), acc1 = _mm512_setzero_si512();
    const std::int32_t* a0 = apack + i * n2;
    for (Index l2 = 0; l2 < n2; ++l2) {
      const __m512i b0 = _mm512_loadu_si512(bpack.data() + l2 * 32);
      const __m512i b1 = _mm512_loadu_si512(bpack.data() + l2 * 32 + 16);
      const __m512i va = _mm512_set1_epi32(a0[l2]);
      acc0 = _mm512_dpwssd_epi32(acc0, va, b0);
      acc1 = _mm512_dpwssd_epi32(acc1, va, b1);
    }
    vnni_flush_row(out.data() + i * p + jb, m0, m1, acc0, acc1);
  }
}

bool have_vnni() {
  static const bool ok =
      __builtin_cpu_supports("avx512vnni") && __builtin_cpu_supports("avx512bw");
  return ok;
}

void gemm_fast_vnni(const MatrixI8& a, const MatrixI8& b, MatrixI32& out) {
  const Index m = a.rows(), p = b.cols();
  const PackedPairs ap = pack_a_pairs(a);
  const Index strips = (p + 31) / 32;
#pragma omp parallel for schedule(dynamic) num_threads(thread_count())
  for (Index sidx = 0; sidx < strips; ++sidx) {
    const Index jb = sidx * 32;
    const Index jw = std::min<Index>(32, p - jb);
    vnni_strip(ap.a.data(), ap.n2, b, jb, jw, out, m);
  }
}

#endif  // OZMM_X86

// Portable fast path; the bound guarantees int32 never overflows here.
void gemm_fast_scalar(const MatrixI8& a, const MatrixI8& b, MatrixI32& out) {
  const Index m = a.rows(), n = a.cols(), p = b.cols();
  MatrixI8 bt = b.transpose();
#pragma omp parallel for schedule(static) num_threads(thread_count())
  for (Index i = 0; i < m; ++i) {
    const std::int8_t* ar = a.data() + i * n;
    for (Index j = 0; j < p; ++j) {
      const std::int8_t* br = bt.data() + j * n;
      std::int32_t s = 0;
      for (Index l = 0; l < n; ++l)
        s += static_cast<std::int32_t>(ar[l]) * br[l];
      out(i, j) += s;
    }
  }
}

MatrixI32 gemm_impl(const MatrixI32* cin, const MatrixI8& a, const MatrixI8& b,
                    OverflowMode mode) {
  check_shapes(a, b);
  const Index m = a.rows(), n = a.cols(), p = b.cols();
  if (cin && (cin->rows() != m || cin->cols() != p))
    throw std::invalid_argument("i8_gemm_accumulate: output shape mismatch");

  i64 cmax = 0;
  if (cin)
    cmax = std::max<i64>(std::abs(static_cast<i64>(cin->minCoeff())),
                         std::abs(static_cast<i64>(cin->maxCoeff())));
  const bool no_overflow_possible =
      cmax + static_cast<i64>(n) * 127 * 127 <=
      std::numeric_limits<std::int32_t>::max();

  if (no_overflow_possible) {
    MatrixI32 out = cin ? *cin : MatrixI32::Zero(m, p);
#ifdef OZMM_X86
    if (have_vnni()) {
      gemm_fast_vnni(a, b, out);
      return out;
    }
#endif
    gemm_fast_scalar(a, b, out);
    return out;
  }

  MatrixI32 out(m, p);
  if (cin) {
    gemm_wide(*cin, a, b, mode, out);
  } else {
    gemm_wide(MatrixI32::Zero(m, p), a, b, mode, out);
  }
  return out;
}

}  // namespace

MatrixI32 i8_gemm(const MatrixI8& a, const MatrixI8& b, OverflowMode mode) {
  return gemm_impl(nullptr, a, b, mode);
}

MatrixI32 i8_gemm_accumulate(const MatrixI32& c, const MatrixI8& a,
                             const MatrixI8& b, OverflowMode mode) {
  return gemm_impl(&c, a, b, mode);
}

std::int64_t compute_r(Index n, int beta) {
  if (n < 1 || beta < 1) throw std::invalid_argument("compute_r: bad arguments");
  const int cl = n <= 1 ? 0 : std::bit_width(static_cast<std::uint64_t>(n) - 1);
  const int e = 31 - 2 * beta - cl;
  return e <= 0 ? 1 : std::int64_t{1} << e;
}

}  // namespace ozmm
