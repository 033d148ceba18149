#pragma once

#include "ozmm/int_gemm.hpp"
#include "ozmm/split.hpp"
#include "ozmm/types.hpp"

#include <cstdint>
#include <stdexcept>
#include <string>

namespace ozmm {

/// How slice products are folded into the FP64 result.
enum class Accumulation {
  PerProduct,       // one FP64 flush per slice product
  Groupwise,        // INT32-accumulate up to r products per group before a flush
  GroupwiseSimple,  // one flush per group; valid only when r >= k
};

struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct SchemeConfig {
  int k = 8;
  SliceStrategy strategy = SliceStrategy::BitMask;
  Accumulation accumulation = Accumulation::PerProduct;
  OverflowMode overflow = OverflowMode::Checked;
  int force_beta = 0;         // test-only override; 0 derives beta from n
  std::int64_t force_r = 0;   // test-only override; 0 derives r from (n, beta)
};

/// The four named method presets.
enum class Method { ozIMMU, ozIMMU_RN, ozIMMU_EF, ozIMMU_H };

const char* to_string(Method m);
Method method_from_string(const std::string& name);
SchemeConfig config_for(Method m, int k);

/// Throws ConfigError when cfg is not internally consistent for inner
/// dimension n (per-slice shifts with group-wise accumulation, the simple
/// group-wise variant with r < k, unsupported sizes).
void validate_config(const SchemeConfig& cfg, Index n);

struct OpCounts {
  std::int64_t int8_gemms = 0;
  std::int64_t fp64_flushes = 0;
  std::int64_t r = 0;
  std::int64_t w = 0;
};

struct PhaseTimings {
  double split_a = 0;
  double split_b = 0;
  double int_gemm = 0;
  double accum_fp64 = 0;
  double copy = 0;
};

/// Closed-form operation counts: k(k+1)/2 INT8 GEMMs always; FP64 flushes are
/// k(k+1)/2 per-product and w group-wise, where
/// w = ceil(k/r) * (k - (r/2) * floor((k-1)/r)), evaluated exactly.
OpCounts op_counts(int k, Index n, Accumulation acc);
OpCounts op_counts_with_r(int k, std::int64_t r, Accumulation acc);

/// Accumulation drivers over already-split inputs. Counts and timings are
/// optional out-parameters filled with runtime-tallied values.
MatrixF64 accumulate_per_product(const SplitMatrix& sa, const SplitMatrix& sb,
                                 OverflowMode mode, OpCounts* counts = nullptr,
                                 PhaseTimings* timings = nullptr);
MatrixF64 accumulate_groupwise(const SplitMatrix& sa, const SplitMatrix& sb,
                               OverflowMode mode, std::int64_t force_r = 0,
                               OpCounts* counts = nullptr,
                               PhaseTimings* timings = nullptr);
MatrixF64 accumulate_groupwise_simple(const SplitMatrix& sa, const SplitMatrix& sb,
                                      OverflowMode mode, std::int64_t force_r = 0,
                                      OpCounts* counts = nullptr,
                                      PhaseTimings* timings = nullptr);

struct OzakiResult {
  MatrixF64 d;
  OpCounts counts;
  PhaseTimings timings;
};

/// Emulated FP64 matrix product: split A and B into INT8 slices, run the
/// slice products on the integer unit, and fold them back in FP64 per the
/// configuration. Deterministic for fixed inputs at any thread count.
OzakiResult ozaki_mm(const MatrixF64& a, const MatrixF64& b,
                     const SchemeConfig& cfg);

/// Full GEMM emulation: alpha * (A B) + beta * C with a fixed elementwise
/// evaluation order fl(fl(alpha*d) + fl(beta*c)).
MatrixF64 ozaki_gemm(double alpha, const MatrixF64& a, const MatrixF64& b,
                     double beta, const MatrixF64& c, const SchemeConfig& cfg);
OzakiResult ozaki_gemm_ex(double alpha, const MatrixF64& a, const MatrixF64& b,
                          double beta, const MatrixF64& c,
                          const SchemeConfig& cfg);

}  // namespace ozmm
