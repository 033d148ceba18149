#pragma once

#include "ozmm/types.hpp"

#include <stdexcept>
#include <string>

namespace ozmm {

/// What happens when an INT32 accumulator entry leaves [-2^31, 2^31-1].
/// Checked raises; Wrapping reduces modulo 2^32 like two's-complement
/// hardware would.
enum class OverflowMode { Checked, Wrapping };

struct OverflowError : std::runtime_error {
  OverflowError(Index r, Index c, long long v)
      : std::runtime_error("i8_gemm: INT32 overflow at (" + std::to_string(r) +
                           ", " + std::to_string(c) + "), exact value " +
                           std::to_string(v)),
        row(r),
        col(c),
        value(v) {}
  Index row;
  Index col;
  long long value;
};

/// Exact INT8 x INT8 -> INT32 product. Internal accumulation is wide enough
/// that Checked mode reports the exact 64-bit value of any overflowing entry.
MatrixI32 i8_gemm(const MatrixI8& a, const MatrixI8& b,
                  OverflowMode mode = OverflowMode::Checked);

/// c + a*b under the same exactness and overflow contract, applied to the
/// full running sum.
MatrixI32 i8_gemm_accumulate(const MatrixI32& c, const MatrixI8& a,
                             const MatrixI8& b,
                             OverflowMode mode = OverflowMode::Checked);

/// Largest number of slice products whose INT32 sum provably cannot
/// overflow: max(1, 2^(31 - 2*beta - ceil(log2 n))).
std::int64_t compute_r(Index n, int beta);

}  // namespace ozmm
