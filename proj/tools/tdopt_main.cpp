// Command-line front end: grid benchmarks, single-tensor decomposition, and
// synthetic data generation. Exit codes: 0 success, 1 configuration error,
// 2 data-format error, 3 one or more benchmark cells failed.

#include <array>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "tdopt/harness.hpp"
#include "tdopt/idx.hpp"
#include "tdopt/models.hpp"
#include "tdopt/optimizers.hpp"
#include "tdopt/report.hpp"

namespace {

using namespace tdopt;

constexpr int kOk = 0;
constexpr int kConfigError = 1;
constexpr int kDataError = 2;
constexpr int kCellsFailed = 3;

ReportFormat parse_format(const std::string& s) {
  const auto fmt = report_format_from_string(s);
  if (!fmt) throw std::invalid_argument("format must be csv or json, got \"" + s + "\"");
  return *fmt;
}

std::string opt_num(const std::optional<double>& v, const char* spec) {
  if (!v) return "-";
  char buf[64];
  std::snprintf(buf, sizeof(buf), spec, *v);
  return buf;
}

void print_aggregates(const BenchmarkResult& result) {
  std::printf("%-16s %-11s %-9s %6s %6s %14s %12s %10s\n", "dataset", "decomposition",
              "optimizer", "cells", "failed", "mean_loss", "mean_time_s", "mean_q");
  for (const AggregateRow& a : result.aggregates)
    std::printf("%-16s %-11s %-9s %6zu %6zu %14s %12s %10s\n", a.dataset.c_str(),
                a.decomposition.c_str(), a.optimizer.c_str(), a.cells, a.failures,
                opt_num(a.mean_final_loss, "%.6g").c_str(),
                opt_num(a.mean_wall_time, "%.3f").c_str(), opt_num(a.mean_q, "%.6g").c_str());
}

struct BenchFlags {
  std::string config_path;
  std::string out_path = "report.csv";
  std::string format = "csv";
  int workers = 0;
  std::uint64_t seed = 0;
  std::size_t max_batches = 0;
  bool fake_clock = false;
  bool histories = false;
  bool workers_set = false, seed_set = false, max_batches_set = false;
};

int run_bench(const BenchFlags& flags) {
  BenchmarkConfig cfg = load_config(flags.config_path);
  if (flags.workers_set) cfg.workers = flags.workers;
  if (flags.seed_set) cfg.seeds = {flags.seed};
  if (flags.max_batches_set) cfg.max_batches = flags.max_batches;
  if (flags.fake_clock) cfg.fake_clock = true;
  const ReportFormat fmt = parse_format(flags.format);

  const BenchmarkResult result = run_benchmark(cfg);
  emit_report(result, fmt, flags.out_path, flags.histories);
  print_aggregates(result);
  std::printf("report written to %s\n", flags.out_path.c_str());
  if (result.failures > 0) {
    std::fprintf(stderr, "%zu cell(s) failed; see the report's stop_reason column\n",
                 result.failures);
    return kCellsFailed;
  }
  return kOk;
}

struct DecomposeFlags {
  std::string input;
  std::string family = "cp";
  std::size_t rank = 10;
  std::size_t rank_q = 0;  // 0: same as rank
  std::string optimizer = "vechgrad";
  std::uint64_t seed = 0;
  long max_iter = 0;  // 0: family default
  std::string out_path;
  std::string format = "csv";
  bool fake_clock = false;
  bool histories = false;
};

int run_decompose(const DecomposeFlags& flags) {
  const auto fam = decomposition_from_string(flags.family);
  if (!fam) throw std::invalid_argument("unknown decomposition family \"" + flags.family + "\"");
  const auto opt_family = family_from_string(flags.optimizer);
  if (!opt_family) throw std::invalid_argument("unknown optimizer \"" + flags.optimizer + "\"");
  const ReportFormat fmt = parse_format(flags.format);

  // A decompose call is a one-cell benchmark: one file, one batch holding the
  // whole tensor, one optimizer, one seed.
  BenchmarkConfig cfg;
  DatasetSpec ds;
  ds.name = std::filesystem::path(flags.input).filename().string();
  ds.source = DataSource::IdxFile;
  ds.path = flags.input;
  ds.batch_size = 1u << 30;
  cfg.datasets.push_back(ds);
  DecompositionSpec dec;
  dec.family = *fam;
  dec.rank = flags.rank;
  dec.rank_q = flags.rank_q != 0 ? flags.rank_q : flags.rank;
  cfg.decompositions.push_back(dec);
  OptimizerConfig opt = OptimizerConfig::defaults(*opt_family);
  if (flags.max_iter > 0) opt.max_iter = flags.max_iter;
  cfg.optimizers.push_back(opt);
  cfg.seeds = {flags.seed};
  cfg.fake_clock = flags.fake_clock;

  const BenchmarkResult result = run_benchmark(cfg);
  const CellRow& row = result.rows.front();
  if (row.failed) {
    std::fprintf(stderr, "decomposition failed: %s\n", row.error.c_str());
    return kCellsFailed;
  }
  std::printf("%s %s on %s: final_loss %.6g, iterations %ld, wall_time_s %.3f, q %s, %s\n",
              row.decomposition.c_str(), row.optimizer.c_str(), row.dataset.c_str(),
              row.report.final_loss, row.report.iterations, row.report.wall_time_seconds,
              opt_num(row.report.convergence_rate_q, "%.6g").c_str(),
              to_string(row.report.stop_reason));
  if (!flags.out_path.empty()) {
    emit_report(result, fmt, flags.out_path, flags.histories);
    std::printf("report written to %s\n", flags.out_path.c_str());
  }
  return kOk;
}

struct SynthFlags {
  std::vector<std::size_t> dims{8, 8, 8};
  std::string family = "cp";
  std::size_t rank = 3;
  std::size_t rank_q = 0;
  double noise_sigma = 0.0;
  std::uint64_t seed = 0;
  std::string out_path;
};

int run_synth(const SynthFlags& flags) {
  const auto fam = decomposition_from_string(flags.family);
  if (!fam) throw std::invalid_argument("unknown decomposition family \"" + flags.family + "\"");
  if (flags.dims.size() != 3) throw std::invalid_argument("--dims needs three extents");
  const std::array<std::size_t, 3> dims{flags.dims[0], flags.dims[1], flags.dims[2]};
  const SynthResult sr =
      synthesize_tensor(dims, *fam, flags.rank, flags.noise_sigma, flags.seed, flags.rank_q);
  // IDX files are image stacks (count, rows, cols). The square-slice family's
  // truth is (I, I, K); store it slice-major as (K, I, I) so the loader's
  // re-orientation recovers the generated layout exactly.
  const bool slice_major = *fam == Family::Dedicom;
  const DenseTensor out_tensor =
      slice_major ? first_mode_last(first_mode_last(sr.tensor)) : sr.tensor;
  save_idx(out_tensor, flags.out_path);
  const auto& od = out_tensor.dims();
  std::printf("wrote %s: %zu x %zu x %zu unsigned-byte tensor (entries clamped to [0,1] and "
              "quantized to 1/255 steps)%s\n",
              flags.out_path.c_str(), od[0], od[1], od[2],
              slice_major ? ", stored slice-major as an image stack" : "");
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Tensor decomposition benchmark suite"};
  app.require_subcommand(1);

  BenchFlags bench_flags;
  CLI::App* bench = app.add_subcommand("bench", "Run an optimizer/decomposition grid benchmark");
  bench->add_option("--config", bench_flags.config_path, "JSON benchmark config")->required();
  bench->add_option("--out", bench_flags.out_path, "Report path (default report.csv)");
  bench->add_option("--format", bench_flags.format, "Report format: csv or json");
  bench->add_option("--workers", bench_flags.workers, "Concurrent grid cells");
  bench->add_option("--seed", bench_flags.seed, "Replace the config's seed list with one seed");
  bench->add_option("--max-batches", bench_flags.max_batches, "Cap batches per dataset");
  bench->add_flag("--fake-clock", bench_flags.fake_clock,
                  "Deterministic per-cell tick counter instead of wall time");
  bench->add_flag("--histories", bench_flags.histories, "Include loss histories (json only)");

  DecomposeFlags dec_flags;
  CLI::App* dec = app.add_subcommand("decompose", "Decompose one IDX tensor with one optimizer");
  dec->add_option("--input", dec_flags.input, "IDX tensor file")->required();
  dec->add_option("--family", dec_flags.family, "cp, dedicom, or paratuck2");
  dec->add_option("--rank", dec_flags.rank, "Latent components");
  dec->add_option("--rank-q", dec_flags.rank_q, "Second latent dimension (default: rank)");
  dec->add_option("--optimizer", dec_flags.optimizer, "Optimizer family name");
  dec->add_option("--seed", dec_flags.seed, "Initialization seed");
  dec->add_option("--max-iter", dec_flags.max_iter, "Iteration budget (default per family)");
  dec->add_option("--out", dec_flags.out_path, "Optional report path");
  dec->add_option("--format", dec_flags.format, "Report format: csv or json");
  dec->add_flag("--fake-clock", dec_flags.fake_clock, "Deterministic tick counter");
  dec->add_flag("--histories", dec_flags.histories, "Include loss history (json only)");

  SynthFlags synth_flags;
  CLI::App* synth = app.add_subcommand("synth", "Write a synthetic exact-rank tensor as IDX");
  synth->add_option("--dims", synth_flags.dims, "Three extents, e.g. --dims 8 8 8")->expected(3);
  synth->add_option("--family", synth_flags.family, "Truth family: cp, dedicom, paratuck2");
  synth->add_option("--rank", synth_flags.rank, "Truth rank");
  synth->add_option("--rank-q", synth_flags.rank_q, "Truth second rank (default: rank)");
  synth->add_option("--noise-sigma", synth_flags.noise_sigma, "Gaussian noise level");
  synth->add_option("--seed", synth_flags.seed, "Generator seed");
  synth->add_option("--out", synth_flags.out_path, "Output IDX path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  bench_flags.workers_set = bench->count("--workers") > 0;
  bench_flags.seed_set = bench->count("--seed") > 0;
  bench_flags.max_batches_set = bench->count("--max-batches") > 0;

  try {
    if (*bench) return run_bench(bench_flags);
    if (*dec) return run_decompose(dec_flags);
    if (*synth) return run_synth(synth_flags);
  } catch (const FormatError& e) {
    std::cerr << "data format error: " << e.what() << "\n";
    return kDataError;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kConfigError;
  }
  return kConfigError;
}
