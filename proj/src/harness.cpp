#include "ozmm/harness.hpp"

#include "ozmm/analysis.hpp"
#include "ozmm/generate.hpp"
#include "ozmm/oracle.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <stdexcept>

namespace ozmm {

namespace {

MatrixF64 gen_pair_a(Index n, double phi, std::uint64_t trial_seed) {
  return gen_phi_matrix(n, n, phi, counter_hash(trial_seed, 1));
}
MatrixF64 gen_pair_b(Index n, double phi, std::uint64_t trial_seed) {
  return gen_phi_matrix(n, n, phi, counter_hash(trial_seed, 2));
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string format_time(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

}  // namespace

const char* const kSweepCsvHeader =
    "n,phi,k,method,seed,max_rel_err,int8_gemms,fp64_flushes,r,w,kprime_max,"
    "t_split_a,t_split_b,t_int_gemm,t_accum,t_copy";

std::vector<SweepRecord> run_sweep(const SweepParams& params) {
  if (params.n_list.empty() || params.phi_list.empty() || params.trials < 1)
    throw std::invalid_argument("run_sweep: empty parameter lists");
  if ((params.k_list.empty() || params.methods.empty()) && !params.fp64_baseline)
    throw std::invalid_argument("run_sweep: nothing to run");

  std::vector<SweepRecord> records;
  for (const Index n : params.n_list) {
    for (const double phi : params.phi_list) {
      // One (A, B, oracle) per trial, shared by every (k, method) cell.
      std::vector<SweepRecord> baselines;
      std::vector<std::vector<SweepRecord>> cells(params.k_list.size() *
                                                  params.methods.size());
      for (int trial = 0; trial < params.trials; ++trial) {
        const std::uint64_t trial_seed = params.seed + trial;
        const MatrixF64 a = gen_pair_a(n, phi, trial_seed);
        const MatrixF64 b = gen_pair_b(n, phi, trial_seed);
        const MatrixF64 exact = exact_gemm_oracle(a, b);

        if (params.fp64_baseline) {
          SweepRecord rec;
          rec.n = n;
          rec.phi = phi;
          rec.k = 0;
          rec.method = "FP64";
          rec.seed = trial_seed;
          rec.max_rel_err = max_rel_err(fp64_gemm_reference(a, b), exact);
          baselines.push_back(rec);
        }

        for (std::size_t ki = 0; ki < params.k_list.size(); ++ki) {
          for (std::size_t mi = 0; mi < params.methods.size(); ++mi) {
            SchemeConfig cfg = config_for(params.methods[mi], params.k_list[ki]);
            cfg.overflow = params.overflow;
            cfg.force_beta = params.force_beta;
            cfg.force_r = params.force_r;
            const OzakiResult res = ozaki_mm(a, b, cfg);
            SweepRecord rec;
            rec.n = n;
            rec.phi = phi;
            rec.k = params.k_list[ki];
            rec.method = to_string(params.methods[mi]);
            rec.seed = trial_seed;
            rec.max_rel_err = max_rel_err(res.d, exact);
            rec.int8_gemms = res.counts.int8_gemms;
            rec.fp64_flushes = res.counts.fp64_flushes;
            rec.r = res.counts.r;
            rec.w = res.counts.w;
            const int beta = cfg.force_beta ? cfg.force_beta : compute_beta(n);
            rec.kprime_max = kprime_max(n, beta);
            rec.timings = res.timings;
            cells[ki * params.methods.size() + mi].push_back(rec);
          }
        }
      }
      for (auto& rec : baselines) records.push_back(std::move(rec));
      for (auto& cell : cells)
        for (auto& rec : cell) records.push_back(std::move(rec));
    }
  }
  return records;
}

void write_csv(std::ostream& out, const std::vector<SweepRecord>& records) {
  out << kSweepCsvHeader << '\n';
  for (const auto& r : records) {
    out << r.n << ',' << format_double(r.phi) << ',' << r.k << ',' << r.method
        << ',' << r.seed << ',' << format_double(r.max_rel_err) << ','
        << r.int8_gemms << ',' << r.fp64_flushes << ',' << r.r << ',' << r.w
        << ',' << r.kprime_max << ',' << format_time(r.timings.split_a) << ','
        << format_time(r.timings.split_b) << ','
        << format_time(r.timings.int_gemm) << ','
        << format_time(r.timings.accum_fp64) << ','
        << format_time(r.timings.copy) << '\n';
  }
}

CountsReport counts_report(Index n, int k, Method method, int force_beta,
                           std::int64_t force_r) {
  const SchemeConfig cfg = config_for(method, k);
  CountsReport rep;
  rep.beta = force_beta ? force_beta : compute_beta(n);
  rep.r = force_r ? force_r : compute_r(n, rep.beta);
  const OpCounts oc = op_counts_with_r(k, rep.r, cfg.accumulation);
  rep.w = oc.w;
  rep.kprime_max = kprime_max(n, rep.beta);
  rep.int8_gemms = oc.int8_gemms;
  rep.fp64_flushes = oc.fp64_flushes;
  rep.flush_ratio =
      static_cast<double>(rep.fp64_flushes) / static_cast<double>(oc.int8_gemms);
  return rep;
}

BoundCheckResult verify_bounds(const BoundCheckParams& params) {
  if (params.phi_list.empty() || params.k_list.empty() || params.trials < 1)
    throw std::invalid_argument("verify_bounds: empty parameter lists");
  static const Method kMethods[] = {Method::ozIMMU, Method::ozIMMU_RN,
                                    Method::ozIMMU_EF, Method::ozIMMU_H};
  BoundCheckResult result;
  std::uint64_t cell_index = 0;
  for (const double phi : params.phi_list) {
    for (const int k : params.k_list) {
      for (const Method method : kMethods) {
        for (int trial = 0; trial < params.trials; ++trial) {
          const std::uint64_t cell_seed =
              counter_hash(params.seed, cell_index++);
          const MatrixF64 a = gen_pair_a(params.n, phi, cell_seed);
          const MatrixF64 b = gen_pair_b(params.n, phi, cell_seed);
          const SchemeConfig cfg = config_for(method, k);
          OzakiResult res = ozaki_mm(a, b, cfg);
          if (params.inject_error && cell_index == 1)
            res.d(0, 0) += std::abs(res.d(0, 0)) * 0x1p-20 + 1.0;
          const MatrixF64 exact = exact_gemm_oracle(a, b);
          const MatrixF64 absAB = exact_gemm_oracle(a.cwiseAbs(), b.cwiseAbs());
          const ErrorBundle eb = total_bound(a, b, cfg, absAB);

          BoundCellResult cell;
          cell.phi = phi;
          cell.k = k;
          cell.method = to_string(method);
          cell.seed = cell_seed;
          for (Index i = 0; i < exact.rows(); ++i) {
            for (Index j = 0; j < exact.cols(); ++j) {
              const double err = std::abs(res.d(i, j) - exact(i, j));
              const double bound = eb.total_bound(i, j);
              if (bound == 0.0) {
                if (err != 0.0) {
                  cell.ok = false;
                  cell.max_ratio = std::numeric_limits<double>::infinity();
                }
                continue;
              }
              cell.max_ratio = std::max(cell.max_ratio, err / bound);
            }
          }
          if (cell.max_ratio > 1.0) cell.ok = false;
          result.ok = result.ok && cell.ok;
          result.cells.push_back(std::move(cell));
        }
      }
    }
  }
  return result;
}

}  // namespace ozmm
