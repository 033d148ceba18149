#pragma once

#include "ozmm/scheme.hpp"
#include "ozmm/types.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace ozmm {

/// One CSV row of an accuracy/operation-count sweep.
struct SweepRecord {
  Index n = 0;
  double phi = 0;
  int k = 0;
  std::string method;  // ozIMMU | ozIMMU_RN | ozIMMU_EF | ozIMMU_H | FP64
  std::uint64_t seed = 0;
  double max_rel_err = 0;
  std::int64_t int8_gemms = 0;
  std::int64_t fp64_flushes = 0;
  std::int64_t r = 0;
  std::int64_t w = 0;
  int kprime_max = 0;
  PhaseTimings timings;
};

struct SweepParams {
  std::vector<Index> n_list;
  std::vector<double> phi_list;
  std::vector<int> k_list;
  std::vector<Method> methods;
  int trials = 1;
  std::uint64_t seed = 0;
  OverflowMode overflow = OverflowMode::Checked;
  int force_beta = 0;
  std::int64_t force_r = 0;
  bool fp64_baseline = true;
};

/// Runs the sweep grid. Errors are measured against exact_gemm_oracle; one
/// FP64-reference baseline row is emitted per (n, phi, trial) with k = 0.
/// Record order is (n, phi, k, method, trial) with the baseline rows first
/// within each (n, phi) block.
std::vector<SweepRecord> run_sweep(const SweepParams& params);

/// Fixed CSV schema; the header row is always present.
extern const char* const kSweepCsvHeader;
void write_csv(std::ostream& out, const std::vector<SweepRecord>& records);

/// Derived constants and operation counts for one (n, k, method) cell.
struct CountsReport {
  int beta = 0;
  std::int64_t r = 0;
  std::int64_t w = 0;
  int kprime_max = 0;
  std::int64_t int8_gemms = 0;
  std::int64_t fp64_flushes = 0;
  double flush_ratio = 0;  // fp64_flushes / (k(k+1)/2)
};

CountsReport counts_report(Index n, int k, Method method, int force_beta = 0,
                           std::int64_t force_r = 0);

struct BoundCheckParams {
  Index n = 64;
  std::vector<double> phi_list;
  std::vector<int> k_list;
  int trials = 10;
  std::uint64_t seed = 0;
  bool inject_error = false;  // negative-control hook: corrupts one entry
};

struct BoundCellResult {
  double phi = 0;
  int k = 0;
  std::string method;
  std::uint64_t seed = 0;
  double max_ratio = 0;  // max elementwise measured-error / bound
  bool ok = true;
};

struct BoundCheckResult {
  std::vector<BoundCellResult> cells;
  bool ok = true;
};

/// Measures |ozaki_mm - oracle| elementwise against the closed-form total
/// bound (|A||B| computed exactly) over every method and the given grid.
BoundCheckResult verify_bounds(const BoundCheckParams& params);

}  // namespace ozmm
