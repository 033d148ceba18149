#include "ozmm/analysis.hpp"

#include "ozmm/oracle.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <stdexcept>

namespace ozmm {

namespace {

// Upward nudge absorbing the bound computation's own rounding; the bound
// must never report less than the true expression.
constexpr double kHeadroom = 1.0 + 0x1p-40;

int floor_log2(Index n) {
  return std::bit_width(static_cast<std::uint64_t>(n)) - 1;
}

std::int64_t coefficient(int k, AccumBoundVariant v, const AccumBoundParams& p) {
  const std::int64_t pairs = static_cast<std::int64_t>(k) * (k + 1) / 2;
  std::int64_t c = 0;
  switch (v) {
    case AccumBoundVariant::Naive:
      c = pairs - 1;
      break;
    case AccumBoundVariant::ImprovedOotomo: {
      const std::int64_t kp = std::min<std::int64_t>(p.kprime_max, k);
      c = pairs - kp * (kp + 1) / 2 - 1;
      break;
    }
    case AccumBoundVariant::Groupwise:
      c = p.w - 1;
      break;
  }
  return std::max<std::int64_t>(c, 0);
}

}  // namespace

MatrixF64 trunc_bound(int k, int beta, const UfpVectors& uf, Index n) {
  if (k < 1 || beta < 1 || n < 1)
    throw std::invalid_argument("trunc_bound: bad arguments");
  // 4(k+1)n is exact in FP64 for any supported size; the power of two shift
  // is exact as well, so the only rounding is against g_i * f_j.
  const double coef =
      std::ldexp(4.0 * (k + 1) * static_cast<double>(n), -beta * k);
  MatrixF64 out(uf.g.size(), uf.f.size());
  for (Index i = 0; i < uf.g.size(); ++i)
    for (Index j = 0; j < uf.f.size(); ++j)
      out(i, j) = coef * (uf.g[i] * uf.f[j]);
  return out;
}

int kprime_max(Index n, int beta) {
  if (n < 1 || beta < 1) throw std::invalid_argument("kprime_max: bad arguments");
  if (beta < 3) return 1;
  // 2u * ufp(8n) <= 2^(-beta(k'+1)+2)  <=>  beta*(k'+1) <= 51 - floor(log2 n)
  const int budget = 51 - floor_log2(n);
  return std::max(1, budget / beta - 1);
}

MatrixF64 accum_bound(int k, AccumBoundVariant variant,
                      const AccumBoundParams& params, const MatrixF64& absAB) {
  if (k < 1) throw std::invalid_argument("accum_bound: k must be >= 1");
  const double c =
      static_cast<double>(coefficient(k, variant, params)) * fp64::kUnitRoundoff;
  return c * absAB;
}

ErrorBundle total_bound(const MatrixF64& a, const MatrixF64& b,
                        const SchemeConfig& cfg, const MatrixF64& absAB) {
  if (a.cols() != b.rows())
    throw std::invalid_argument("total_bound: inner dimensions differ");
  const Index n = a.cols();
  ErrorBundle eb;
  eb.k = cfg.k;
  eb.beta = cfg.force_beta ? cfg.force_beta : compute_beta(n);
  eb.r = cfg.force_r ? cfg.force_r : compute_r(n, eb.beta);
  eb.kprime_max = kprime_max(n, eb.beta);
  eb.w = op_counts_with_r(cfg.k, eb.r, Accumulation::Groupwise).w;

  eb.trunc_bound = trunc_bound(cfg.k, eb.beta, ufp_vectors(a, b), n);

  AccumBoundParams params;
  AccumBoundVariant variant;
  if (cfg.accumulation == Accumulation::PerProduct) {
    variant = AccumBoundVariant::ImprovedOotomo;
    params.kprime_max = eb.kprime_max;
  } else {
    variant = AccumBoundVariant::Groupwise;
    params.w = eb.w;
  }
  eb.accum_bound = accum_bound(cfg.k, variant, params, absAB);

  eb.total_bound = ((eb.trunc_bound + eb.accum_bound) * kHeadroom).eval();
  return eb;
}

ErrorBundle total_bound(const MatrixF64& a, const MatrixF64& b,
                        const SchemeConfig& cfg) {
  const MatrixF64 absAB =
      (fp64_gemm_reference(a.cwiseAbs(), b.cwiseAbs()) * kHeadroom).eval();
  return total_bound(a, b, cfg, absAB);
}

}  // namespace ozmm
