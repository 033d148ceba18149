#pragma once

#include "ozmm/types.hpp"

#include <stdexcept>
#include <string>

namespace ozmm {

/// Raised when the correctly rounded value of an exact dot product lies
/// outside the FP64 range.
struct GemmOverflowError : std::overflow_error {
  GemmOverflowError(Index r, Index c)
      : std::overflow_error("exact_gemm_oracle: FP64 overflow at entry (" +
                            std::to_string(r) + ", " + std::to_string(c) + ")"),
        row(r),
        col(c) {}
  Index row;
  Index col;
};

/// Reference product with every entry correctly rounded (round to nearest,
/// ties to even). Each FP64 factor is split into an integer significand and
/// an exponent, products are accumulated exactly in fixed point, and a single
/// rounding happens at the end. This is the ground truth the accuracy
/// measurements compare against.
MatrixF64 exact_gemm_oracle(const MatrixF64& a, const MatrixF64& b);

/// Plain FP64 triple loop with ascending inner index; the deterministic
/// double-precision baseline.
MatrixF64 fp64_gemm_reference(const MatrixF64& a, const MatrixF64& b);

/// Max over entries of |t_ij - r_ij| / |r_ij|. Entries where r_ij == 0
/// contribute |t_ij| / max_ij |r_ij| instead. Errors out when R is all zero.
double max_rel_err(const MatrixF64& t, const MatrixF64& r);

}  // namespace ozmm
