// Command-line front end: emulated FP64 GEMM over matrix files, accuracy and
// operation-count sweeps, and error-bound verification. All numerics live in
// the library; this file only parses flags and formats output.

#include "ozmm/analysis.hpp"
#include "ozmm/generate.hpp"
#include "ozmm/harness.hpp"
#include "ozmm/io.hpp"
#include "ozmm/oracle.hpp"
#include "ozmm/scheme.hpp"
#include "ozmm/split.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

namespace {

using nlohmann::json;

ozmm::OverflowMode parse_overflow(const std::string& s) {
  if (s == "checked") return ozmm::OverflowMode::Checked;
  if (s == "wrapping") return ozmm::OverflowMode::Wrapping;
  throw ozmm::ConfigError("--overflow-mode must be 'checked' or 'wrapping'");
}

std::vector<ozmm::Method> parse_methods(const std::vector<std::string>& names) {
  std::vector<ozmm::Method> out;
  for (const auto& n : names) out.push_back(ozmm::method_from_string(n));
  return out;
}

json timings_json(const ozmm::PhaseTimings& t) {
  return json{{"t_split_a", t.split_a},
              {"t_split_b", t.split_b},
              {"t_int_gemm", t.int_gemm},
              {"t_accum", t.accum_fp64},
              {"t_copy", t.copy}};
}

struct GemmArgs {
  std::string a_path, b_path, c_path, out_path, dump_prefix;
  double alpha = 1.0, beta = 0.0;
  int k = 8;
  std::string method = "ozIMMU_H";
  std::string overflow = "checked";
  int force_beta = 0;
  std::int64_t force_r = 0;
};

int run_gemm(const GemmArgs& args) {
  const ozmm::MatrixF64 a = ozmm::load_matrix<double>(args.a_path);
  const ozmm::MatrixF64 b = ozmm::load_matrix<double>(args.b_path);
  ozmm::MatrixF64 c;
  if (!args.c_path.empty()) {
    c = ozmm::load_matrix<double>(args.c_path);
  } else {
    c = ozmm::MatrixF64::Zero(a.rows(), b.cols());
  }

  ozmm::SchemeConfig cfg =
      ozmm::config_for(ozmm::method_from_string(args.method), args.k);
  cfg.overflow = parse_overflow(args.overflow);
  cfg.force_beta = args.force_beta;
  cfg.force_r = args.force_r;

  if (!args.dump_prefix.empty()) {
    auto split = [&](const ozmm::MatrixF64& m, ozmm::Side side) {
      switch (cfg.strategy) {
        case ozmm::SliceStrategy::BitMask:
          return ozmm::split_bitmask(m, cfg.k, side, cfg.force_beta);
        case ozmm::SliceStrategy::RoundNearestPerSlice:
          return ozmm::split_round_nearest(m, cfg.k, side, cfg.force_beta);
        default:
          return ozmm::split_rn_const_shift(m, cfg.k, side, cfg.force_beta);
      }
    };
    ozmm::dump_split(args.dump_prefix + ".a", split(a, ozmm::Side::Left));
    ozmm::dump_split(args.dump_prefix + ".b", split(b, ozmm::Side::Right));
  }

  const ozmm::OzakiResult res =
      ozmm::ozaki_gemm_ex(args.alpha, a, b, args.beta, c, cfg);
  ozmm::save_matrix(args.out_path, res.d);

  json line{{"cmd", "gemm"},
            {"m", a.rows()},
            {"n", a.cols()},
            {"p", b.cols()},
            {"k", args.k},
            {"method", args.method},
            {"alpha", args.alpha},
            {"beta", args.beta},
            {"int8_gemms", res.counts.int8_gemms},
            {"fp64_flushes", res.counts.fp64_flushes},
            {"r", res.counts.r},
            {"w", res.counts.w},
            {"out", args.out_path}};
  line.update(timings_json(res.timings));
  std::cout << line.dump() << '\n';
  return 0;
}

struct SweepArgs {
  std::vector<ozmm::Index> n_list;
  std::vector<double> phi_list{0.0};
  std::vector<int> k_list;
  std::vector<std::string> methods;
  int trials = 1;
  std::uint64_t seed = 0;
  std::string out_path;
  std::string overflow = "checked";
  int force_beta = 0;
  std::int64_t force_r = 0;
  bool plot_data = false;
};

int run_sweep_cmd(const SweepArgs& args) {
  ozmm::SweepParams params;
  params.n_list = args.n_list;
  params.phi_list = args.phi_list;
  params.k_list = args.k_list;
  params.methods = parse_methods(args.methods);
  params.trials = args.trials;
  params.seed = args.seed;
  params.overflow = parse_overflow(args.overflow);
  params.force_beta = args.force_beta;
  params.force_r = args.force_r;

  const std::vector<ozmm::SweepRecord> records = ozmm::run_sweep(params);
  if (!args.out_path.empty()) {
    std::ofstream out(args.out_path);
    if (!out) throw ozmm::FormatError(args.out_path + ": cannot open for writing");
    ozmm::write_csv(out, records);
  } else if (!args.plot_data) {
    ozmm::write_csv(std::cout, records);
  }

  if (args.plot_data) {
    // Ready-to-plot columns: median max_rel_err per (n, phi, method, k).
    std::map<std::tuple<ozmm::Index, double, std::string, int>,
             std::vector<double>> groups;
    for (const auto& r : records)
      groups[{r.n, r.phi, r.method, r.k}].push_back(r.max_rel_err);
    std::cout << "n phi method k median_max_rel_err\n";
    for (auto& [key, errs] : groups) {
      std::sort(errs.begin(), errs.end());
      const double median = errs[errs.size() / 2];
      std::cout << std::get<0>(key) << ' ' << std::get<1>(key) << ' '
                << std::get<2>(key) << ' ' << std::get<3>(key) << ' ' << median
                << '\n';
    }
  }
  return 0;
}

struct CountsArgs {
  ozmm::Index n = 1024;
  int k = 8;
  std::string method = "ozIMMU_H";
  int force_beta = 0;
  std::int64_t force_r = 0;
};

int run_counts(const CountsArgs& args) {
  const ozmm::CountsReport rep = ozmm::counts_report(
      args.n, args.k, ozmm::method_from_string(args.method), args.force_beta,
      args.force_r);
  std::cout << "n            " << args.n << "\n"
            << "k            " << args.k << "\n"
            << "method       " << args.method << "\n"
            << "beta         " << rep.beta << "\n"
            << "r            " << rep.r << "\n"
            << "w            " << rep.w << "\n"
            << "kprime_max   " << rep.kprime_max << "\n"
            << "int8_gemms   " << rep.int8_gemms << "\n"
            << "fp64_flushes " << rep.fp64_flushes << "\n"
            << "flush_ratio  " << rep.fp64_flushes << "/" << rep.int8_gemms
            << " = " << rep.flush_ratio << "\n";
  return 0;
}

struct VerifyArgs {
  ozmm::Index n = 64;
  std::vector<double> phi_list{0.0};
  std::vector<int> k_list;
  int trials = 10;
  std::uint64_t seed = 0;
  bool inject_error = false;
};

int run_verify(const VerifyArgs& args) {
  ozmm::BoundCheckParams params;
  params.n = args.n;
  params.phi_list = args.phi_list;
  params.k_list = args.k_list;
  params.trials = args.trials;
  params.seed = args.seed;
  params.inject_error = args.inject_error;

  const ozmm::BoundCheckResult result = ozmm::verify_bounds(params);
  double worst = 0;
  for (const auto& cell : result.cells) {
    worst = std::max(worst, cell.max_ratio);
    if (!cell.ok)
      std::cerr << "bound violated: phi=" << cell.phi << " k=" << cell.k
                << " method=" << cell.method << " seed=" << cell.seed
                << " max_ratio=" << cell.max_ratio << "\n";
  }
  std::cout << "cells " << result.cells.size() << ", max error/bound ratio "
            << worst << ", " << (result.ok ? "all within bounds" : "VIOLATIONS")
            << "\n";
  return result.ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"FP64 GEMM emulation on an exact INT8 matrix-unit model"};
  app.require_subcommand(1);

  GemmArgs gemm;
  auto* cmd_gemm = app.add_subcommand("gemm", "alpha*A*B + beta*C over OZMM files");
  cmd_gemm->add_option("a", gemm.a_path, "left input file")->required();
  cmd_gemm->add_option("b", gemm.b_path, "right input file")->required();
  cmd_gemm->add_option("c", gemm.c_path, "optional C input file");
  cmd_gemm->add_option("--alpha", gemm.alpha);
  cmd_gemm->add_option("--beta", gemm.beta);
  cmd_gemm->add_option("--k", gemm.k, "slice count");
  cmd_gemm->add_option("--method", gemm.method,
                       "ozIMMU | ozIMMU_RN | ozIMMU_EF | ozIMMU_H");
  cmd_gemm->add_option("--out", gemm.out_path, "output file")->required();
  cmd_gemm->add_option("--overflow-mode", gemm.overflow, "checked | wrapping");
  cmd_gemm->add_option("--force-beta", gemm.force_beta, "test-only beta override");
  cmd_gemm->add_option("--force-r", gemm.force_r, "test-only r override");
  cmd_gemm->add_option("--dump-splits", gemm.dump_prefix,
                       "debug: dump slice/shift/residual files with this prefix");

  SweepArgs sweep;
  auto* cmd_sweep = app.add_subcommand("sweep", "accuracy/count sweep to CSV");
  cmd_sweep->add_option("--n", sweep.n_list)->required()->delimiter(',');
  cmd_sweep->add_option("--phi", sweep.phi_list)->delimiter(',');
  cmd_sweep->add_option("--k", sweep.k_list)->required()->delimiter(',');
  cmd_sweep->add_option("--method", sweep.methods)->required()->delimiter(',');
  cmd_sweep->add_option("--trials", sweep.trials);
  cmd_sweep->add_option("--seed", sweep.seed);
  cmd_sweep->add_option("--out", sweep.out_path, "CSV output path");
  cmd_sweep->add_option("--overflow-mode", sweep.overflow);
  cmd_sweep->add_option("--force-beta", sweep.force_beta);
  cmd_sweep->add_option("--force-r", sweep.force_r);
  cmd_sweep->add_flag("--plot-data", sweep.plot_data,
                      "print plot-ready median columns to stdout");

  CountsArgs counts;
  auto* cmd_counts = app.add_subcommand("counts", "derived constants and counts");
  cmd_counts->add_option("--n", counts.n)->required();
  cmd_counts->add_option("--k", counts.k)->required();
  cmd_counts->add_option("--method", counts.method)->required();
  cmd_counts->add_option("--force-beta", counts.force_beta);
  cmd_counts->add_option("--force-r", counts.force_r);

  VerifyArgs verify;
  auto* cmd_verify =
      app.add_subcommand("verify-bounds", "check measured error against bounds");
  cmd_verify->add_option("--n", verify.n)->required();
  cmd_verify->add_option("--phi", verify.phi_list)->delimiter(',');
  cmd_verify->add_option("--k", verify.k_list)->required()->delimiter(',');
  cmd_verify->add_option("--trials", verify.trials);
  cmd_verify->add_option("--seed", verify.seed);
  cmd_verify->add_flag("--inject-error", verify.inject_error,
                       "negative control: corrupt one entry before checking");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (cmd_gemm->parsed()) return run_gemm(gemm);
    if (cmd_sweep->parsed()) return run_sweep_cmd(sweep);
    if (cmd_counts->parsed()) return run_counts(counts);
    if (cmd_verify->parsed()) return run_verify(verify);
  } catch (const ozmm::FormatError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const ozmm::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
