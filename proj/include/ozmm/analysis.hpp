#pragma once

#include "ozmm/scheme.hpp"
#include "ozmm/types.hpp"
#include "ozmm/ufp.hpp"

#include <cstdint>

namespace ozmm {

/// Closed-form elementwise error bounds for one scheme configuration.
struct ErrorBundle {
  int beta = 0;
  int k = 0;
  std::int64_t r = 0;
  int kprime_max = 0;
  std::int64_t w = 0;
  double u = fp64::kUnitRoundoff;
  MatrixF64 trunc_bound;  // slice truncation part
  MatrixF64 accum_bound;  // FP64 accumulation part
  MatrixF64 total_bound;  // sum, nudged upward to absorb its own rounding
};

/// Truncation part: 4(k+1) n 2^(-beta k) g_i f_j.
MatrixF64 trunc_bound(int k, int beta, const UfpVectors& uf, Index n);

/// Largest group prefix whose FP64 partial sum is provably exact:
/// max k' with 2u * ufp(8n) <= 2^(-beta(k'+1)+2), floored at 1, and 1 outright
/// when beta < 3 (the magnitude lemma behind it needs beta >= 3).
int kprime_max(Index n, int beta);

enum class AccumBoundVariant { Naive, ImprovedOotomo, Groupwise };

struct AccumBoundParams {
  int kprime_max = 0;   // ImprovedOotomo
  std::int64_t w = 0;   // Groupwise
};

/// Accumulation part: coefficient * u * |A||B| with the coefficient
///   Naive:           k(k+1)/2 - 1
///   ImprovedOotomo:  k(k+1)/2 - k'(k'+1)/2 - 1   (k' = min(kprime_max, k))
///   Groupwise:       w - 1
/// clamped at 0 from below and assembled in integer arithmetic.
MatrixF64 accum_bound(int k, AccumBoundVariant variant,
                      const AccumBoundParams& params, const MatrixF64& absAB);

/// Assembles the full bundle for cfg. The |A||B| factor is computed in FP64
/// here; tests that need an airtight bound pass an exactly computed |A||B|
/// to the second overload instead.
ErrorBundle total_bound(const MatrixF64& a, const MatrixF64& b,
                        const SchemeConfig& cfg);
ErrorBundle total_bound(const MatrixF64& a, const MatrixF64& b,
                        const SchemeConfig& cfg, const MatrixF64& absAB);

}  // namespace ozmm
