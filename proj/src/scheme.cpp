#include "ozmm/scheme.hpp"

#include "ozmm/parallel.hpp"

#include <chrono>
#include <cmath>

namespace ozmm {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

void check_pair(const SplitMatrix& sa, const SplitMatrix& sb) {
  if (sa.side != Side::Left || sb.side != Side::Right)
    throw ConfigError("accumulate: expected a Left and a Right split");
  if (sa.cols() != sb.rows())
    throw ConfigError("accumulate: inner dimensions differ");
  if (sa.k != sb.k) throw ConfigError("accumulate: slice counts differ");
  if (sa.beta != sb.beta) throw ConfigError("accumulate: slice widths differ");
}

// C += rowu_i * widen(P) * colu_j. Both scale factors are powers of two, so
// the only rounded operation is the final addition.
void flush_scaled(MatrixF64& c, const MatrixI32& p, const VectorF64& rowu,
                  const VectorF64& colu) {
  const Index m = c.rows(), cols = c.cols();
#pragma omp parallel for schedule(static) num_threads(thread_count())
  for (Index i = 0; i < m; ++i) {
    const double ru = rowu[i];
    if (ru == 0.0) continue;
    double* crow = c.data() + i * cols;
    const std::int32_t* prow = p.data() + i * cols;
    for (Index j = 0; j < cols; ++j)
      crow[j] += ru * static_cast<double>(prow[j]) * colu[j];
  }
}

VectorF64 units_of(const SplitMatrix& s, int slice) {
  const Index len = s.side == Side::Left ? s.rows() : s.cols();
  VectorF64 u(len);
  for (Index i = 0; i < len; ++i) u[i] = s.unit(slice, i);
  return u;
}

// Power-of-two multiples of the constant shift vector; exact.
VectorF64 scaled_shift(const VectorF64& shift, int exp2) {
  VectorF64 out(shift.size());
  for (Index i = 0; i < shift.size(); ++i) out[i] = std::ldexp(shift[i], exp2);
  return out;
}

std::int64_t resolve_r(const SplitMatrix& sa, std::int64_t force_r) {
  if (force_r != 0) {
    if (force_r < 1) throw ConfigError("force_r must be >= 1");
    return force_r;
  }
  return compute_r(sa.cols(), sa.beta);
}

MatrixF64 groupwise_impl(const SplitMatrix& sa, const SplitMatrix& sb,
                         OverflowMode mode, std::int64_t r, bool simple,
                         OpCounts* counts, PhaseTimings* timings) {
  check_pair(sa, sb);
  if (!sa.const_shift_form() || !sb.const_shift_form())
    throw ConfigError(
        "group-wise accumulation requires constant-shift splits (the "
        "per-slice strategy cannot share one exponent per group)");
  if (simple && r < sa.k)
    throw ConfigError("simple group-wise accumulation requires r >= k");

  const Index m = sa.rows(), p = sb.cols();
  const int k = sa.k, beta = sa.beta;
  MatrixF64 c = MatrixF64::Zero(m, p);
  if (counts) counts->r = r;

  for (int g = 2; g <= k + 1; ++g) {
    MatrixI32 acc = MatrixI32::Zero(m, p);
    std::int64_t q = 0;
    for (int s = 1; s <= g - 1; ++s) {
      ++q;
      const auto t0 = Clock::now();
      acc = i8_gemm_accumulate(acc, sa.slices[s - 1], sb.slices[g - s - 1], mode);
      if (timings) timings->int_gemm += seconds_since(t0);
      if (counts) ++counts->int8_gemms;
      const bool group_done = s == g - 1;
      if ((!simple && q == r) || group_done) {
        const auto t1 = Clock::now();
        const VectorF64 rowu = scaled_shift(sa.const_shift, 2 - beta * g);
        flush_scaled(c, acc, rowu, sb.const_shift);
        if (timings) timings->accum_fp64 += seconds_since(t1);
        if (counts) ++counts->fp64_flushes;
        q = 0;
        if (!group_done) acc.setZero();
      }
    }
  }
  return c;
}

std::int64_t int8_gemm_count(int k) {
  return static_cast<std::int64_t>(k) * (k + 1) / 2;
}

std::int64_t flush_count_w(int k, std::int64_t r) {
  // ceil(k/r) * (k - (r/2) * floor((k-1)/r)) with the halving kept exact:
  // ceil(k/r) * floor((k-1)/r) is always even.
  const std::int64_t q = (k + r - 1) / r;
  const std::int64_t f = (k - 1) / r;
  return q * k - (q * f / 2) * r;
}

}  // namespace

const char* to_string(Method m) {
  switch (m) {
    case Method::ozIMMU: return "ozIMMU";
    case Method::ozIMMU_RN: return "ozIMMU_RN";
    case Method::ozIMMU_EF: return "ozIMMU_EF";
    case Method::ozIMMU_H: return "ozIMMU_H";
  }
  return "?";
}

Method method_from_string(const std::string& name) {
  if (name == "ozIMMU") return Method::ozIMMU;
  if (name == "ozIMMU_RN") return Method::ozIMMU_RN;
  if (name == "ozIMMU_EF") return Method::ozIMMU_EF;
  if (name == "ozIMMU_H") return Method::ozIMMU_H;
  throw ConfigError("unknown method: " + name);
}

SchemeConfig config_for(Method m, int k) {
  SchemeConfig cfg;
  cfg.k = k;
  switch (m) {
    case Method::ozIMMU:
      cfg.strategy = SliceStrategy::BitMask;
      cfg.accumulation = Accumulation::PerProduct;
      break;
    case Method::ozIMMU_RN:
      cfg.strategy = SliceStrategy::RoundNearestPerSlice;
      cfg.accumulation = Accumulation::PerProduct;
      break;
    case Method::ozIMMU_EF:
      cfg.strategy = SliceStrategy::BitMask;
      cfg.accumulation = Accumulation::Groupwise;
      break;
    case Method::ozIMMU_H:
      cfg.strategy = SliceStrategy::RoundNearestConstShift;
      cfg.accumulation = Accumulation::Groupwise;
      break;
  }
  return cfg;
}

void validate_config(const SchemeConfig& cfg, Index n) {
  if (cfg.k < 1) throw ConfigError("k must be >= 1");
  const int beta = cfg.force_beta ? cfg.force_beta : compute_beta(n);
  if (cfg.strategy == SliceStrategy::RoundNearestPerSlice &&
      cfg.accumulation != Accumulation::PerProduct)
    throw ConfigError(
        "per-slice round-to-nearest shifts are only valid with per-product "
        "accumulation");
  if (cfg.accumulation == Accumulation::GroupwiseSimple) {
    const std::int64_t r = cfg.force_r ? cfg.force_r : compute_r(n, beta);
    if (r < cfg.k)
      throw ConfigError("simple group-wise accumulation requires r >= k");
  }
}

OpCounts op_counts_with_r(int k, std::int64_t r, Accumulation acc) {
  if (k < 1 || r < 1) throw ConfigError("op_counts: bad arguments");
  OpCounts c;
  c.int8_gemms = int8_gemm_count(k);
  c.r = r;
  c.w = flush_count_w(k, r);
  c.fp64_flushes = acc == Accumulation::PerProduct ? c.int8_gemms : c.w;
  return c;
}

OpCounts op_counts(int k, Index n, Accumulation acc) {
  return op_counts_with_r(k, compute_r(n, compute_beta(n)), acc);
}

MatrixF64 accumulate_per_product(const SplitMatrix& sa, const SplitMatrix& sb,
                                 OverflowMode mode, OpCounts* counts,
                                 PhaseTimings* timings) {
  check_pair(sa, sb);
  const Index m = sa.rows(), p = sb.cols();
  const int k = sa.k;
  MatrixF64 c = MatrixF64::Zero(m, p);
  for (int g = 2; g <= k + 1; ++g) {
    for (int s = 1; s <= g - 1; ++s) {
      const int t = g - s;
      const auto t0 = Clock::now();
      const MatrixI32 prod = i8_gemm(sa.slices[s - 1], sb.slices[t - 1], mode);
      if (timings) timings->int_gemm += seconds_since(t0);
      if (counts) ++counts->int8_gemms;
      const auto t1 = Clock::now();
      flush_scaled(c, prod, units_of(sa, s - 1), units_of(sb, t - 1));
      if (timings) timings->accum_fp64 += seconds_since(t1);
      if (counts) ++counts->fp64_flushes;
    }
  }
  return c;
}

MatrixF64 accumulate_groupwise(const SplitMatrix& sa, const SplitMatrix& sb,
                               OverflowMode mode, std::int64_t force_r,
                               OpCounts* counts, PhaseTimings* timings) {
  return groupwise_impl(sa, sb, mode, resolve_r(sa, force_r), false, counts,
                        timings);
}

MatrixF64 accumulate_groupwise_simple(const SplitMatrix& sa,
                                      const SplitMatrix& sb, OverflowMode mode,
                                      std::int64_t force_r, OpCounts* counts,
                                      PhaseTimings* timings) {
  return groupwise_impl(sa, sb, mode, resolve_r(sa, force_r), true, counts,
                        timings);
}

OzakiResult ozaki_mm(const MatrixF64& a, const MatrixF64& b,
                     const SchemeConfig& cfg) {
  if (a.cols() != b.rows())
    throw std::invalid_argument("ozaki_mm: inner dimensions differ");
  validate_config(cfg, a.cols());

  auto split_side = [&](const MatrixF64& m, Side side) {
    switch (cfg.strategy) {
      case SliceStrategy::BitMask:
        return split_bitmask(m, cfg.k, side, cfg.force_beta);
      case SliceStrategy::RoundNearestPerSlice:
        return split_round_nearest(m, cfg.k, side, cfg.force_beta);
      case SliceStrategy::RoundNearestConstShift:
        return split_rn_const_shift(m, cfg.k, side, cfg.force_beta);
    }
    throw ConfigError("unknown strategy");
  };

  OzakiResult res;
  auto t0 = Clock::now();
  const SplitMatrix sa = split_side(a, Side::Left);
  res.timings.split_a = seconds_since(t0);
  t0 = Clock::now();
  const SplitMatrix sb = split_side(b, Side::Right);
  res.timings.split_b = seconds_since(t0);

  const std::int64_t r = cfg.force_r ? cfg.force_r : compute_r(a.cols(), sa.beta);
  switch (cfg.accumulation) {
    case Accumulation::PerProduct:
      res.d = accumulate_per_product(sa, sb, cfg.overflow, &res.counts,
                                     &res.timings);
      res.counts.r = r;
      break;
    case Accumulation::Groupwise:
      res.d = accumulate_groupwise(sa, sb, cfg.overflow, cfg.force_r,
                                   &res.counts, &res.timings);
      break;
    case Accumulation::GroupwiseSimple:
      res.d = accumulate_groupwise_simple(sa, sb, cfg.overflow, cfg.force_r,
                                          &res.counts, &res.timings);
      break;
  }
  res.counts.w = flush_count_w(cfg.k, r);
  return res;
}

OzakiResult ozaki_gemm_ex(double alpha, const MatrixF64& a, const MatrixF64& b,
                          double beta, const MatrixF64& c,
                          const SchemeConfig& cfg) {
  if (c.rows() != a.rows() || c.cols() != b.cols())
    throw std::invalid_argument("ozaki_gemm: C shape mismatch");
  OzakiResult res = ozaki_mm(a, b, cfg);
  const auto t0 = Clock::now();
  MatrixF64 out(c.rows(), c.cols());
  const Index total = out.size();
  double* o = out.data();
  const double* d = res.d.data();
  const double* ci = c.data();
#pragma omp parallel for schedule(static) num_threads(thread_count())
  for (Index idx = 0; idx < total; ++idx) o[idx] = alpha * d[idx] + beta * ci[idx];
  res.timings.copy = seconds_since(t0);
  res.d = std::move(out);
  return res;
}

MatrixF64 ozaki_gemm(double alpha, const MatrixF64& a, const MatrixF64& b,
                     double beta, const MatrixF64& c, const SchemeConfig& cfg) {
  return ozaki_gemm_ex(alpha, a, b, beta, c, cfg).d;
}

}  // namespace ozmm
