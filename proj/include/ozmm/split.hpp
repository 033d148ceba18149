#pragma once

#include "ozmm/types.hpp"

#include <string>
#include <vector>

namespace ozmm {

/// How an FP64 matrix is cut into INT8 slices.
enum class SliceStrategy {
  BitMask,                 // consecutive significand bit fields on the row grid
  RoundNearestPerSlice,    // round-to-nearest extraction, grid rescanned per slice
  RoundNearestConstShift,  // round-to-nearest extraction on one geometric grid
};

enum class Side { Left, Right };

const char* to_string(SliceStrategy s);

/// k INT8 slices of one FP64 matrix plus the power-of-two shift metadata
/// needed to undo the scaling, and the unsplit remainder V_k. The defining
/// property is exactness: reconstruct(*this) + residual equals the original
/// matrix bitwise.
///
/// Slice s (1-based) of entry (i,j) represents the value
///     slices[s-1](i,j) * unit(s-1, i)       (Left; j for Right),
/// where for the constant-shift strategies unit(s-1, i) is
/// const_shift[i] * 2^(1 - beta*s) and for the per-slice strategy it is
/// stored directly in slice_units.
struct SplitMatrix {
  Side side = Side::Left;
  int k = 0;
  int beta = 0;
  SliceStrategy strategy = SliceStrategy::BitMask;
  std::vector<MatrixI8> slices;
  VectorF64 const_shift;                // mu (Left) or nu (Right); const-shift form
  std::vector<VectorF64> slice_units;   // per-slice grid units; RN-per-slice form
  MatrixF64 residual;
  bool underflow_flagged = false;  // some row scale sat below 2^-1000

  bool const_shift_form() const {
    return strategy != SliceStrategy::RoundNearestPerSlice;
  }

  /// Grid unit of slice s (0-based) for normalized line i (row for Left,
  /// column for Right). Always 0 or a power of two.
  double unit(int s, Index i) const;

  Index rows() const { return slices.front().rows(); }
  Index cols() const { return slices.front().cols(); }
};

/// Slice width in bits for inner dimension n: min(7, floor((31 - log2 n)/2)),
/// evaluated with ceil(log2 n) for non-powers of two so the no-overflow
/// guarantee stays on the safe side. Requires 1 <= n <= 2^29.
int compute_beta(Index n);

/// Bit-field splitting. Row scale is ufp(row max); slice s holds the s-th
/// beta-bit chunk of |a_ij| on that grid, carrying the sign of a_ij.
SplitMatrix split_bitmask(const MatrixF64& a, int k, Side side, int forced_beta = 0);

/// Round-to-nearest splitting with a per-slice grid: each slice rounds the
/// current remainder to the coarsest grid on which the rounded row max still
/// fits in beta bits, then subtracts exactly. Nonzero slice magnitudes
/// strictly decrease down the slice index.
SplitMatrix split_round_nearest(const MatrixF64& a, int k, Side side,
                                int forced_beta = 0);

/// Round-to-nearest splitting on a single geometric grid of ratio 2^-beta
/// fixed before the slice loop, so the result is in constant-shift form and
/// eligible for group-wise integer accumulation.
SplitMatrix split_rn_const_shift(const MatrixF64& a, int k, Side side,
                                 int forced_beta = 0);

/// Sum of the shift-applied slices; adding the residual reproduces the
/// original matrix bitwise.
MatrixF64 reconstruct(const SplitMatrix& s);

/// Debug dump via the OZMM container: slices, shift vectors (as 1xN FP64
/// matrices) and the residual, written as <prefix>.<part>.ozmm.
void dump_split(const std::string& prefix, const SplitMatrix& s);

}  // namespace ozmm
