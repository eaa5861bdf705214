#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tdopt/models.hpp"
#include "tdopt/optimizers.hpp"
#include "tdopt/tensor.hpp"

namespace tdopt {

// Deterministic stateless mix of two seed words (splitmix64 over a ^ rot(b));
// used to derive per-cell initialization seeds so that neighbouring batch
// indices do not produce correlated starting points.
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b);

// A Clock that returns 0, 1, 2, ... regardless of real time. Each call to
// this factory starts a fresh counter.
Clock counting_clock();

struct SynthResult {
  DenseTensor tensor;
  ParamVector truth;
};

// Draws ground-truth factors with i.i.d. uniform [0,1) entries (seeded),
// reconstructs them exactly, then adds i.i.d. Gaussian noise of standard
// deviation noise_sigma. rank_q applies to the two-rank family and defaults
// to rank when 0.
SynthResult synthesize_tensor(const std::array<std::size_t, 3>& dims, Family family,
                              std::size_t rank, double noise_sigma, std::uint64_t seed,
                              std::size_t rank_q = 0);

// Splits along the first mode into ceil(count/batch_size) tensors in order;
// the last batch may be smaller. Concatenating the batches reproduces the
// input exactly.
std::vector<DenseTensor> batch_dataset(const DenseTensor& t, std::size_t batch_size);

// (n, r, c) to (r, c, n): re-orients an image stack so the images become
// frontal slices, which the square-slice decomposition family requires.
DenseTensor first_mode_last(const DenseTensor& t);

// Empirical order of convergence: the mean over sliding four-point windows of
//   log|(f_{t+1}-f_t)/(f_t-f_{t-1})| / log|(f_t-f_{t-1})/(f_{t-1}-f_{t-2})|,
// skipping windows where any consecutive difference is zero or non-finite or
// where the quotient itself is non-finite. last_windows > 0 keeps only that
// many of the newest valid windows. Returns nullopt when no valid window
// exists (including histories shorter than 4).
std::optional<double> convergence_rate(const std::vector<double>& history,
                                       std::size_t last_windows = 0);

enum class DataSource { IdxFile, RawGrayDir, Synthetic };

struct DatasetSpec {
  std::string name;
  DataSource source = DataSource::Synthetic;
  std::string path;  // IdxFile / RawGrayDir

  // Synthetic sources only. The per-run tensor seed is mixed with the grid
  // seed so every benchmark seed sees a fresh instance.
  std::array<std::size_t, 3> dims{8, 8, 8};
  Family truth_family = Family::Cp;
  std::size_t true_rank = 3;
  std::size_t true_rank_q = 0;  // 0: same as true_rank
  double noise_sigma = 0.0;
  std::uint64_t seed = 0;

  // 0 resolves via default_batch_size(name) for file sources and to dims[0]
  // (a single batch) for synthetic ones.
  std::size_t batch_size = 0;
};

// Table-driven defaults for the common image benchmarks: 64 for the
// 28 and 32 pixel sets (mnist, cifar-10, cifar-100), 32 for the 64 pixel
// sets (coco, lfw). Case-insensitive; nullopt for unknown names.
std::optional<std::size_t> default_batch_size(const std::string& dataset_name);

struct DecompositionSpec {
  Family family = Family::Cp;
  std::size_t rank = 10;
  std::size_t rank_q = 10;  // second latent dimension where the family has one
};

struct BenchmarkConfig {
  std::vector<DatasetSpec> datasets;
  std::vector<DecompositionSpec> decompositions;
  std::vector<OptimizerConfig> optimizers;
  std::vector<std::uint64_t> seeds;
  std::size_t max_batches = 0;  // 0: no cap
  int workers = 1;
  // Replaces wall-clock timing with a per-cell deterministic counter so two
  // identical runs emit byte-identical reports.
  bool fake_clock = false;
};

// Builds a BenchmarkConfig from its JSON text form; load_config reads the
// file first. Both throw std::invalid_argument with a human-readable message
// on unknown keys' values, missing required fields, or unparseable JSON.
BenchmarkConfig parse_config_json(const std::string& text);
BenchmarkConfig load_config(const std::string& path);

// One grid cell: (dataset, decomposition, optimizer, seed, batch).
struct CellRow {
  std::string dataset;
  std::string decomposition;
  std::string optimizer;
  std::uint64_t seed = 0;
  std::size_t batch_index = 0;
  RunReport report;
  bool failed = false;  // the cell threw; error holds the message
  std::string error;
};

struct AggregateRow {
  std::string dataset;
  std::string decomposition;
  std::string optimizer;
  std::size_t cells = 0;     // cells that completed
  std::size_t failures = 0;  // cells that threw
  std::optional<double> mean_final_loss;
  std::optional<double> mean_wall_time;
  std::optional<double> mean_q;  // over cells with a defined rate
};

struct BenchmarkResult {
  std::vector<CellRow> rows;            // sorted by cell key
  std::vector<AggregateRow> aggregates;  // one per (dataset, decomposition, optimizer)
  std::size_t failures = 0;
};

// Runs the full grid. Data loading happens up front and is excluded from the
// recorded wall times; cells run on up to cfg.workers threads and are
// assembled in key order regardless of completion order. A cell that throws
// is recorded as failed and the run continues. Square image batches are
// re-oriented to pixels x pixels x images for the family whose slices must be
// square.
BenchmarkResult run_benchmark(const BenchmarkConfig& cfg);

}  // namespace tdopt
