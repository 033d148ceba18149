#include "ozmm/split.hpp"

#include "ozmm/io.hpp"
#include "ozmm/parallel.hpp"
#include "ozmm/ufp.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <stdexcept>

namespace ozmm {

namespace {

constexpr double kSigmaScale = 6755399441055744.0;  // 0.75 * 2^53, exact
constexpr int kUnderflowExp = -1000;
constexpr int kOverflowExp = 920;  // shift constants must stay finite

int ceil_log2(Index n) {
  return n <= 1 ? 0 : std::bit_width(static_cast<std::uint64_t>(n) - 1);
}

int resolve_beta(Index inner, int forced) {
  if (forced != 0) {
    if (forced < 1 || forced > 7)
      throw std::invalid_argument("split: forced beta outside 1..7");
    return forced;
  }
  return compute_beta(inner);
}

void check_split_args(const MatrixF64& a, int k) {
  if (a.rows() < 1 || a.cols() < 1)
    throw std::invalid_argument("split: empty matrix");
  if (k < 1) throw std::invalid_argument("split: k must be >= 1");
}

SplitMatrix make_skeleton(Index m, Index n, int k, int beta, SliceStrategy strat) {
  SplitMatrix s;
  s.k = k;
  s.beta = beta;
  s.strategy = strat;
  s.slices.assign(k, MatrixI8::Zero(m, n));
  if (strat == SliceStrategy::RoundNearestPerSlice)
    s.slice_units.assign(k, VectorF64::Zero(m));
  else
    s.const_shift = VectorF64::Zero(m);
  s.residual = MatrixF64::Zero(m, n);
  return s;
}

// All workers operate in Left form (row-normalized); Right splits go through
// a transpose on the way in and out.

void bitmask_rows(const MatrixF64& a, SplitMatrix& out) {
  const Index m = a.rows(), n = a.cols();
  const int beta = out.beta;
  const int k = out.k;
  const std::uint64_t mask = (1ull << beta) - 1;
  bool flagged = false;
#pragma omp parallel for schedule(static) num_threads(thread_count()) \
    reduction(|| : flagged)
  for (Index i = 0; i < m; ++i) {
    const double rm = a.row(i).cwiseAbs().maxCoeff();
    if (rm == 0.0) continue;
    const int p = ufp_exponent(rm);
    if (p < kUnderflowExp) flagged = true;
    out.const_shift[i] = std::ldexp(1.0, p);
    for (Index j = 0; j < n; ++j) {
      const SigExp se = decompose(a(i, j));
      if (se.sig == 0) continue;
      const std::uint64_t asig = static_cast<std::uint64_t>(std::abs(se.sig));
      const bool neg = se.sig < 0;
      for (int s = 1; s <= k; ++s) {
        const int t = se.exp - p - 1 + s * beta;
        std::uint64_t chunk = 0;
        if (t >= beta) {
          chunk = 0;  // element bits all lie below this slice
        } else if (t >= 0) {
          chunk = (asig << t) & mask;
        } else if (-t <= 63) {
          chunk = (asig >> -t) & mask;
        }
        const auto v = static_cast<std::int8_t>(neg ? -static_cast<int>(chunk)
                                                    : static_cast<int>(chunk));
        out.slices[s - 1](i, j) = v;
      }
      // Remainder: the bits of |a| strictly below the slice-k grid unit.
      const int tk = se.exp - p - 1 + k * beta;
      if (tk >= 0) continue;  // on-grid, nothing left
      if (-tk >= 64) {
        out.residual(i, j) = a(i, j);
      } else {
        const std::uint64_t rsig = asig & ((1ull << -tk) - 1);
        if (rsig)
          out.residual(i, j) =
              std::ldexp(neg ? -static_cast<double>(rsig) : static_cast<double>(rsig),
                         se.exp);
      }
    }
  }
  out.underflow_flagged = flagged;
}

// Round-to-nearest extraction of one slice row on grid `unit`: rounds each
// remainder to the nearest multiple of `unit`, stores the integer factor,
// and subtracts exactly.
template <class Row>
void extract_row(Row&& w, double unit, std::int8_t* slice_row, Index n) {
  const double sigma = kSigmaScale * unit;
  for (Index j = 0; j < n; ++j) {
    const double x = (w[j] + sigma) - sigma;
    slice_row[j] = static_cast<std::int8_t>(x / unit);
    w[j] -= x;
  }
}

// Grid on which the rounded row max needs at most beta bits: ufp(rm)*2^(1-beta),
// doubled in the boundary case where rm would round up to 2^beta grid units.
double rn_unit(double rm, int beta, bool* flagged, bool* bumped) {
  const int pe = ufp_exponent(rm);
  if (pe < kUnderflowExp) *flagged = true;
  if (pe > kOverflowExp)
    throw std::overflow_error("split: row magnitude too large for shift extraction");
  const double threshold = std::ldexp(2.0 - std::ldexp(1.0, -beta), pe);
  const bool up = rm >= threshold;
  if (bumped) *bumped = up;
  return std::ldexp(1.0, pe + 1 - beta + (up ? 1 : 0));
}

void round_nearest_rows(const MatrixF64& a, SplitMatrix& out) {
  const Index m = a.rows(), n = a.cols();
  bool flagged = false;
#pragma omp parallel for schedule(static) num_threads(thread_count()) \
    reduction(|| : flagged)
  for (Index i = 0; i < m; ++i) {
    Eigen::RowVectorXd w = a.row(i);
    for (int s = 0; s < out.k; ++s) {
      const double rm = w.cwiseAbs().maxCoeff();
      if (rm == 0.0) break;  // remaining slices stay zero
      const double unit = rn_unit(rm, out.beta, &flagged, nullptr);
      out.slice_units[s][i] = unit;
      extract_row(w, unit, out.slices[s].data() + i * n, n);
    }
    out.residual.row(i) = w;
  }
  out.underflow_flagged = flagged;
}

void rn_const_shift_rows(const MatrixF64& a, SplitMatrix& out) {
  const Index m = a.rows(), n = a.cols();
  const int beta = out.beta;
  bool flagged = false;
#pragma omp parallel for schedule(static) num_threads(thread_count()) \
    reduction(|| : flagged)
  for (Index i = 0; i < m; ++i) {
    const double rm = a.row(i).cwiseAbs().maxCoeff();
    if (rm == 0.0) continue;
    bool bumped = false;
    const double u1 = rn_unit(rm, beta, &flagged, &bumped);
    const int pe = ufp_exponent(rm) + (bumped ? 1 : 0);
    out.const_shift[i] = std::ldexp(1.0, pe);
    Eigen::RowVectorXd w = a.row(i);
    for (int s = 1; s <= out.k; ++s) {
      const double unit = s == 1 ? u1 : std::ldexp(1.0, pe + 1 - beta * s);
      if ((w.array() != 0.0).any())
        extract_row(w, unit, out.slices[s - 1].data() + i * n, n);
    }
    out.residual.row(i) = w;
  }
  out.underflow_flagged = flagged;
}

SplitMatrix transpose_back(SplitMatrix s) {
  for (auto& sl : s.slices) sl = MatrixI8(sl.transpose());
  s.residual = MatrixF64(s.residual.transpose());
  s.side = Side::Right;
  return s;
}

SplitMatrix split_any(const MatrixF64& a, int k, Side side, int forced_beta,
                      SliceStrategy strat,
                      void (*worker)(const MatrixF64&, SplitMatrix&)) {
  check_split_args(a, k);
  const Index inner = side == Side::Left ? a.cols() : a.rows();
  const int beta = resolve_beta(inner, forced_beta);
  if (side == Side::Left) {
    SplitMatrix s = make_skeleton(a.rows(), a.cols(), k, beta, strat);
    s.side = Side::Left;
    worker(a, s);
    return s;
  }
  const MatrixF64 at = a.transpose();
  SplitMatrix s = make_skeleton(at.rows(), at.cols(), k, beta, strat);
  worker(at, s);
  return transpose_back(std::move(s));
}

}  // namespace

const char* to_string(SliceStrategy s) {
  switch (s) {
    case SliceStrategy::BitMask: return "bitmask";
    case SliceStrategy::RoundNearestPerSlice: return "round-nearest";
    case SliceStrategy::RoundNearestConstShift: return "round-nearest-const-shift";
  }
  return "?";
}

int compute_beta(Index n) {
  if (n < 1) throw std::invalid_argument("compute_beta: n must be >= 1");
  if (n > (Index{1} << 29))
    throw std::invalid_argument("compute_beta: n > 2^29 unsupported");
  return std::min(7, (31 - ceil_log2(n)) / 2);
}

double SplitMatrix::unit(int s, Index i) const {
  if (strategy == SliceStrategy::RoundNearestPerSlice) return slice_units[s][i];
  return std::ldexp(const_shift[i], 1 - beta * (s + 1));
}

SplitMatrix split_bitmask(const MatrixF64& a, int k, Side side, int forced_beta) {
  return split_any(a, k, side, forced_beta, SliceStrategy::BitMask, bitmask_rows);
}

SplitMatrix split_round_nearest(const MatrixF64& a, int k, Side side,
                                int forced_beta) {
  return split_any(a, k, side, forced_beta, SliceStrategy::RoundNearestPerSlice,
                   round_nearest_rows);
}

SplitMatrix split_rn_const_shift(const MatrixF64& a, int k, Side side,
                                 int forced_beta) {
  return split_any(a, k, side, forced_beta, SliceStrategy::RoundNearestConstShift,
                   rn_const_shift_rows);
}

MatrixF64 reconstruct(const SplitMatrix& s) {
  const Index rows = s.rows(), cols = s.cols();
  MatrixF64 out = MatrixF64::Zero(rows, cols);
  for (int sl = 0; sl < s.k; ++sl) {
    const MatrixI8& m = s.slices[sl];
    for (Index i = 0; i < rows; ++i) {
      for (Index j = 0; j < cols; ++j) {
        const double u = s.unit(sl, s.side == Side::Left ? i : j);
        out(i, j) += static_cast<double>(m(i, j)) * u;
      }
    }
  }
  return out;
}

void dump_split(const std::string& prefix, const SplitMatrix& s) {
  for (int sl = 0; sl < s.k; ++sl)
    save_matrix(prefix + ".slice" + std::to_string(sl + 1) + ".ozmm", s.slices[sl]);
  auto as_row = [](const VectorF64& v) {
    MatrixF64 m(1, v.size());
    m.row(0) = v.transpose();
    return m;
  };
  if (s.const_shift_form()) {
    save_matrix(prefix + ".shift.ozmm", as_row(s.const_shift));
  } else {
    for (int sl = 0; sl < s.k; ++sl)
      save_matrix(prefix + ".shift" + std::to_string(sl + 1) + ".ozmm",
                  as_row(s.slice_units[sl]));
  }
  save_matrix(prefix + ".residual.ozmm", s.residual);
}

}  // namespace ozmm
