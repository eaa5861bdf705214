#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "tdopt/harness.hpp"
#include "tdopt/idx.hpp"
#include "tdopt/models.hpp"
#include "tdopt/report.hpp"

using namespace tdopt;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    static std::atomic<int> counter{0};
    path = fs::temp_directory_path() /
           ("tdopt_test_" + std::to_string(getpid()) + "_" + std::to_string(counter++));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
};

void write_bytes(const fs::path& path, const std::vector<unsigned char>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  REQUIRE(bool(out));
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  REQUIRE(bool(out));
  out << text;
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(bool(in));
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void push_be32(std::vector<unsigned char>& out, std::uint32_t v) {
  out.push_back(static_cast<unsigned char>((v >> 24) & 0xff));
  out.push_back(static_cast<unsigned char>((v >> 16) & 0xff));
  out.push_back(static_cast<unsigned char>((v >> 8) & 0xff));
  out.push_back(static_cast<unsigned char>(v & 0xff));
}

std::vector<unsigned char> idx_bytes(std::uint32_t magic, std::uint32_t count,
                                     std::uint32_t rows, std::uint32_t cols,
                                     const std::vector<unsigned char>& payload) {
  std::vector<unsigned char> bytes;
  push_be32(bytes, magic);
  push_be32(bytes, count);
  push_be32(bytes, rows);
  push_be32(bytes, cols);
  bytes.insert(bytes.end(), payload.begin(), payload.end());
  return bytes;
}

// Minimal benchmark config: one exact-rank synthetic dataset, CP, cheap runs.
BenchmarkConfig tiny_config() {
  BenchmarkConfig cfg;
  DatasetSpec ds;
  ds.name = "synth4";
  ds.source = DataSource::Synthetic;
  ds.dims = {4, 4, 4};
  ds.truth_family = Family::Cp;
  ds.true_rank = 2;
  ds.seed = 7;
  cfg.datasets.push_back(ds);
  DecompositionSpec dec;
  dec.family = Family::Cp;
  dec.rank = 2;
  cfg.decompositions.push_back(dec);
  OptimizerConfig vh = OptimizerConfig::defaults(OptFamily::VecHGrad);
  vh.max_iter = 5;
  OptimizerConfig sgd = OptimizerConfig::defaults(OptFamily::Sgd);
  sgd.max_iter = 20;
  cfg.optimizers = {vh, sgd};
  cfg.seeds = {1};
  cfg.fake_clock = true;
  return cfg;
}

}  // namespace

TEST_CASE("idx files round-trip through the loader") {
  TempDir dir;
  std::vector<unsigned char> payload(12);
  for (std::size_t n = 0; n < payload.size(); ++n)
    payload[n] = static_cast<unsigned char>(20 * n);
  const fs::path path = dir.path / "three.idx";
  write_bytes(path, idx_bytes(0x00000803u, 3, 2, 2, payload));

  const DenseTensor t = load_idx(path.string());
  REQUIRE(t.dims() == std::vector<std::size_t>{3, 2, 2});
  for (std::size_t n = 0; n < 12; ++n)
    CHECK(t.data()[n] == doctest::Approx(payload[n] / 255.0).epsilon(1e-12));
  CHECK(t(1, 0, 1) == doctest::Approx(payload[5] / 255.0));

  const fs::path one = dir.path / "one.idx";
  write_bytes(one, idx_bytes(0x00000803u, 1, 1, 1, {255}));
  const DenseTensor scalar = load_idx(one.string());
  CHECK(scalar.data()[0] == 1.0);
}

TEST_CASE("idx loader rejects corrupt input with byte offsets") {
  TempDir dir;
  const fs::path wrong = dir.path / "labels.idx";
  write_bytes(wrong, idx_bytes(0x00000801u, 1, 1, 1, {7}));
  CHECK_THROWS_AS(load_idx(wrong.string()), FormatError);
  try {
    load_idx(wrong.string());
  } catch (const FormatError& e) {
    CHECK(e.offset == 0);
    CHECK(std::string(e.what()).find("magic") != std::string::npos);
  }

  const fs::path empty = dir.path / "empty.idx";
  write_bytes(empty, {});
  CHECK_THROWS_AS(load_idx(empty.string()), FormatError);

  const fs::path cut = dir.path / "cut.idx";
  std::vector<unsigned char> bytes = idx_bytes(0x00000803u, 2, 2, 2, {1, 2, 3});
  write_bytes(cut, bytes);
  try {
    load_idx(cut.string());
    FAIL("expected a truncation error");
  } catch (const FormatError& e) {
    CHECK(e.offset == bytes.size());
    CHECK(std::string(e.what()).find("truncated") != std::string::npos);
  }

  CHECK_THROWS_AS(load_idx((dir.path / "missing.idx").string()), std::runtime_error);
}

TEST_CASE("idx writer inverts the loader on byte-representable tensors") {
  TempDir dir;
  DenseTensor t({2, 2, 3});
  for (std::size_t n = 0; n < t.size(); ++n) t.data()[n] = double(n * 17 % 256) / 255.0;
  const fs::path path = dir.path / "saved.idx";
  save_idx(t, path.string());
  const DenseTensor back = load_idx(path.string());
  REQUIRE(back.dims() == t.dims());
  for (std::size_t n = 0; n < t.size(); ++n) CHECK(back.data()[n] == t.data()[n]);
}

TEST_CASE("raw grayscale directories load through their manifest") {
  TempDir dir;
  write_text(dir.path / "manifest.json",
             R"({"width": 3, "height": 2, "files": ["a.raw", "b.raw"]})");
  write_bytes(dir.path / "a.raw", {0, 51, 102, 153, 204, 255});
  write_bytes(dir.path / "b.raw", {255, 204, 153, 102, 51, 0});
  const DenseTensor t = load_raw_gray_dir(dir.path.string());
  REQUIRE(t.dims() == std::vector<std::size_t>{2, 2, 3});
  CHECK(t(0, 0, 0) == 0.0);
  CHECK(t(0, 1, 2) == 1.0);
  CHECK(t(1, 0, 0) == 1.0);
  CHECK(t(0, 0, 1) == doctest::Approx(51.0 / 255.0));
}

TEST_CASE("raw grayscale loader rejects bad manifests and frames") {
  TempDir none;
  CHECK_THROWS_AS(load_raw_gray_dir(none.path.string()), FormatError);

  TempDir bad;
  write_text(bad.path / "manifest.json", "{not json");
  CHECK_THROWS_AS(load_raw_gray_dir(bad.path.string()), FormatError);

  TempDir missing;
  write_text(missing.path / "manifest.json", R"({"width": 2, "files": ["a.raw"]})");
  CHECK_THROWS_AS(load_raw_gray_dir(missing.path.string()), FormatError);

  TempDir shortframe;
  write_text(shortframe.path / "manifest.json",
             R"({"width": 2, "height": 2, "files": ["a.raw"]})");
  write_bytes(shortframe.path / "a.raw", {1, 2, 3});
  try {
    load_raw_gray_dir(shortframe.path.string());
    FAIL("expected a frame-size error");
  } catch (const FormatError& e) {
    CHECK(std::string(e.what()).find("a.raw") != std::string::npos);
  }
}

TEST_CASE("synthetic tensors reconstruct their truth exactly without noise") {
  const SynthResult sr = synthesize_tensor({4, 3, 2}, Family::Cp, 2, 0.0, 11);
  CHECK(loss(sr.truth, sr.tensor) <= 1e-12);

  const SynthResult same = synthesize_tensor({4, 3, 2}, Family::Cp, 2, 0.0, 11);
  for (std::size_t n = 0; n < sr.tensor.size(); ++n)
    CHECK(same.tensor.data()[n] == sr.tensor.data()[n]);

  const SynthResult other = synthesize_tensor({4, 3, 2}, Family::Cp, 2, 0.0, 12);
  double diff = 0.0;
  for (std::size_t n = 0; n < sr.tensor.size(); ++n)
    diff += std::abs(other.tensor.data()[n] - sr.tensor.data()[n]);
  CHECK(diff > 1e-6);
}

TEST_CASE("synthetic noise magnitude follows its standard deviation") {
  const SynthResult sr = synthesize_tensor({8, 8, 8}, Family::Cp, 3, 0.1, 21);
  // |noise| concentrates near sigma*sqrt(n) for n = 512 draws.
  const double noise = loss(sr.truth, sr.tensor);
  const double expected = 0.1 * std::sqrt(512.0);
  CHECK(noise >= 0.7 * expected);
  CHECK(noise <= 1.3 * expected);

  const SynthResult pt2 = synthesize_tensor({4, 5, 3}, Family::Paratuck2, 2, 0.0, 3, 3);
  CHECK(loss(pt2.truth, pt2.tensor) <= 1e-12);
}

TEST_CASE("batching splits the first mode and preserves order") {
  DenseTensor t({10, 2, 3});
  for (std::size_t n = 0; n < t.size(); ++n) t.data()[n] = double(n);
  const std::vector<DenseTensor> batches = batch_dataset(t, 4);
  REQUIRE(batches.size() == 3);
  CHECK(batches[0].dims() == std::vector<std::size_t>{4, 2, 3});
  CHECK(batches[1].dims() == std::vector<std::size_t>{4, 2, 3});
  CHECK(batches[2].dims() == std::vector<std::size_t>{2, 2, 3});

  std::size_t n = 0;
  for (const DenseTensor& b : batches)
    for (std::size_t m = 0; m < b.size(); ++m) CHECK(b.data()[m] == double(n++));
  CHECK(n == t.size());

  CHECK(batch_dataset(t, 10).size() == 1);
  CHECK(batch_dataset(t, 64).size() == 1);
  CHECK_THROWS_AS(batch_dataset(t, 0), std::invalid_argument);
}

TEST_CASE("convergence rate is one on geometric histories") {
  std::vector<double> h;
  for (int t = 0; t <= 10; ++t) h.push_back(std::pow(2.0, -t));
  const auto q = convergence_rate(h);
  REQUIRE(q.has_value());
  CHECK(std::abs(*q - 1.0) <= 1e-9);
}

TEST_CASE("convergence rate nears two on quadratically shrinking histories") {
  std::vector<double> h;
  for (int t = 0; t <= 6; ++t) h.push_back(std::pow(10.0, -std::pow(2.0, t)));
  const auto q = convergence_rate(h);
  REQUIRE(q.has_value());
  CHECK(*q >= 1.9);
  CHECK(*q <= 2.1);
}

TEST_CASE("convergence rate is undefined without a valid window") {
  CHECK(!convergence_rate({5.0, 5.0, 5.0, 5.0, 5.0}).has_value());
  CHECK(!convergence_rate({3.0, 2.0, 1.0}).has_value());
  CHECK(!convergence_rate({}).has_value());
  // A zero difference in the middle invalidates the windows that touch it.
  CHECK(!convergence_rate({4.0, 2.0, 2.0, 1.0}).has_value());
}

TEST_CASE("convergence rate can keep only the newest windows") {
  // Differences 1, 1/2, 1/4, 1/16, 1/256 give window rates 1, 2, 2.
  std::vector<double> h{2.0};
  const double diffs[] = {1.0, 0.5, 0.25, 0.0625, 0.00390625};
  for (double d : diffs) h.push_back(h.back() - d);
  CHECK(*convergence_rate(h) == doctest::Approx((1.0 + 2.0 + 2.0) / 3.0));
  CHECK(*convergence_rate(h, 2) == doctest::Approx(2.0));
  CHECK(*convergence_rate(h, 50) == doctest::Approx((1.0 + 2.0 + 2.0) / 3.0));
}

TEST_CASE("known dataset names resolve their table batch sizes") {
  CHECK(default_batch_size("mnist") == 64);
  CHECK(default_batch_size("MNIST") == 64);
  CHECK(default_batch_size("cifar-10") == 64);
  CHECK(default_batch_size("cifar-100") == 64);
  CHECK(default_batch_size("coco") == 32);
  CHECK(default_batch_size("lfw") == 32);
  CHECK(!default_batch_size("imagenet").has_value());
}

TEST_CASE("config json parses into a full benchmark description") {
  const std::string text = R"({
    "datasets": [
      {"name": "synth8", "source": "synthetic", "dims": [8, 8, 8], "family": "cp",
       "true_rank": 3, "noise_sigma": 0.05, "seed": 9, "batch_size": 8},
      {"name": "mnist", "source": "idx", "path": "data/mnist.idx"}
    ],
    "decompositions": [
      {"family": "cp", "rank": 4},
      {"family": "paratuck2", "rank": 3, "rank_q": 2}
    ],
    "optimizers": [
      {"family": "vechgrad", "max_iter": 50},
      {"family": "sgd", "lr": 0.001, "wolfe": {"c2": 0.2}}
    ],
    "seeds": [1, 2, 3],
    "max_batches": 2,
    "workers": 4,
    "fake_clock": true
  })";
  const BenchmarkConfig cfg = parse_config_json(text);
  REQUIRE(cfg.datasets.size() == 2);
  CHECK(cfg.datasets[0].source == DataSource::Synthetic);
  CHECK(cfg.datasets[0].dims == std::array<std::size_t, 3>{8, 8, 8});
  CHECK(cfg.datasets[0].noise_sigma == 0.05);
  CHECK(cfg.datasets[0].batch_size == 8);
  CHECK(cfg.datasets[1].source == DataSource::IdxFile);
  CHECK(cfg.datasets[1].path == "data/mnist.idx");
  CHECK(cfg.datasets[1].batch_size == 0);  // resolved to the mnist default later
  REQUIRE(cfg.decompositions.size() == 2);
  CHECK(cfg.decompositions[0].rank == 4);
  CHECK(cfg.decompositions[1].family == Family::Paratuck2);
  CHECK(cfg.decompositions[1].rank_q == 2);
  REQUIRE(cfg.optimizers.size() == 2);
  CHECK(cfg.optimizers[0].family == OptFamily::VecHGrad);
  CHECK(cfg.optimizers[0].max_iter == 50);
  CHECK(cfg.optimizers[0].cg_max_iter == 20);  // untouched default
  CHECK(cfg.optimizers[1].lr == 0.001);
  CHECK(cfg.optimizers[1].wolfe.c2 == 0.2);
  CHECK(cfg.seeds == std::vector<std::uint64_t>{1, 2, 3});
  CHECK(cfg.max_batches == 2);
  CHECK(cfg.workers == 4);
  CHECK(cfg.fake_clock);
}

TEST_CASE("config json rejects malformed input") {
  CHECK_THROWS_AS(parse_config_json("{nope"), std::invalid_argument);
  CHECK_THROWS_AS(parse_config_json(R"({"datasets": []})"), std::invalid_argument);
  CHECK_THROWS_AS(parse_config_json(R"({
    "datasets": [{"name": "a", "source": "synthetic"}],
    "decompositions": [{"family": "tucker"}],
    "optimizers": [{"family": "vechgrad"}],
    "seeds": [1]})"),
                  std::invalid_argument);
  CHECK_THROWS_AS(parse_config_json(R"({
    "datasets": [{"name": "a", "source": "synthetic", "typo_key": 1}],
    "decompositions": [{"family": "cp"}],
    "optimizers": [{"family": "vechgrad"}],
    "seeds": [1]})"),
                  std::invalid_argument);
  CHECK_THROWS_AS(parse_config_json(R"({
    "datasets": [{"name": "a", "source": "idx"}],
    "decompositions": [{"family": "cp"}],
    "optimizers": [{"family": "vechgrad"}],
    "seeds": [1]})"),
                  std::invalid_argument);  // idx source without a path
  CHECK_THROWS_AS(parse_config_json(R"({
    "datasets": [{"name": "a", "source": "synthetic"}],
    "decompositions": [{"family": "cp"}],
    "optimizers": [{"family": "newton"}],
    "seeds": [1]})"),
                  std::invalid_argument);
}

TEST_CASE("benchmark grid produces one aggregate per dataset decomposition optimizer") {
  const BenchmarkConfig cfg = tiny_config();
  const BenchmarkResult result = run_benchmark(cfg);
  REQUIRE(result.rows.size() == 2);  // 1 dataset x 1 decomposition x 2 optimizers x 1 seed x 1 batch
  REQUIRE(result.aggregates.size() == 2);
  CHECK(result.failures == 0);
  CHECK(result.rows[0].optimizer == "vechgrad");
  CHECK(result.rows[1].optimizer == "sgd");

  for (std::size_t a = 0; a < 2; ++a) {
    const AggregateRow& agg = result.aggregates[a];
    CHECK(agg.cells == 1);
    REQUIRE(agg.mean_final_loss.has_value());
    CHECK(*agg.mean_final_loss == result.rows[a].report.final_loss);
    REQUIRE(agg.mean_wall_time.has_value());
    CHECK(*agg.mean_wall_time == result.rows[a].report.wall_time_seconds);
  }
}

TEST_CASE("benchmark aggregates are the means of their cells") {
  BenchmarkConfig cfg = tiny_config();
  cfg.seeds = {1, 2, 3};
  const BenchmarkResult result = run_benchmark(cfg);
  REQUIRE(result.rows.size() == 6);
  REQUIRE(result.aggregates.size() == 2);
  for (std::size_t a = 0; a < result.aggregates.size(); ++a) {
    const AggregateRow& agg = result.aggregates[a];
    double loss_sum = 0.0, time_sum = 0.0, q_sum = 0.0;
    std::size_t cells = 0, q_count = 0;
    for (const CellRow& row : result.rows) {
      if (row.optimizer != agg.optimizer || row.dataset != agg.dataset ||
          row.decomposition != agg.decomposition || row.failed)
        continue;
      ++cells;
      loss_sum += row.report.final_loss;
      time_sum += row.report.wall_time_seconds;
      if (row.report.convergence_rate_q) {
        q_sum += *row.report.convergence_rate_q;
        ++q_count;
      }
    }
    CHECK(agg.cells == cells);
    CHECK(*agg.mean_final_loss == doctest::Approx(loss_sum / double(cells)).epsilon(1e-15));
    CHECK(*agg.mean_wall_time == doctest::Approx(time_sum / double(cells)).epsilon(1e-15));
    if (q_count > 0) {
      REQUIRE(agg.mean_q.has_value());
      CHECK(*agg.mean_q == doctest::Approx(q_sum / double(q_count)).epsilon(1e-15));
    } else {
      CHECK(!agg.mean_q.has_value());
    }
  }

  // Distinct grid seeds see distinct synthetic instances.
  CHECK(result.rows[0].report.loss_history.front() !=
        result.rows[1].report.loss_history.front());
}

TEST_CASE("benchmark runs are deterministic under the fake clock") {
  const BenchmarkConfig cfg = tiny_config();
  const std::string a = render_csv(run_benchmark(cfg));
  const std::string b = render_csv(run_benchmark(cfg));
  CHECK(a == b);
  const std::string ja = render_json(run_benchmark(cfg), true);
  const std::string jb = render_json(run_benchmark(cfg), true);
  CHECK(ja == jb);
}

TEST_CASE("worker count does not change benchmark output") {
  BenchmarkConfig cfg = tiny_config();
  cfg.seeds = {1, 2};
  cfg.workers = 1;
  const std::string serial = render_csv(run_benchmark(cfg));
  cfg.workers = 4;
  const std::string threaded = render_csv(run_benchmark(cfg));
  CHECK(serial == threaded);
}

TEST_CASE("infeasible cells fail alone and the run continues") {
  BenchmarkConfig cfg = tiny_config();
  cfg.datasets[0].dims = {4, 5, 3};  // no square slices for dedicom
  cfg.datasets[0].true_rank = 2;
  DecompositionSpec ded;
  ded.family = Family::Dedicom;
  ded.rank = 2;
  cfg.decompositions.push_back(ded);
  const BenchmarkResult result = run_benchmark(cfg);
  REQUIRE(result.rows.size() == 4);
  CHECK(result.failures == 2);  // both optimizers on the dedicom row
  std::size_t failed = 0;
  for (const CellRow& row : result.rows)
    if (row.failed) {
      ++failed;
      CHECK(row.decomposition == "dedicom");
      CHECK(!row.error.empty());
    } else {
      CHECK(row.decomposition == "cp");
    }
  CHECK(failed == 2);

  const std::string csv = render_csv(result);
  CHECK(csv.find("FAILED") != std::string::npos);
}

TEST_CASE("image batches are re-oriented for square-slice decompositions") {
  TempDir dir;
  // 3 images of 2x2: as (3, 2, 2) dedicom is infeasible, as (2, 2, 3) it runs.
  std::vector<unsigned char> payload(12);
  for (std::size_t n = 0; n < payload.size(); ++n)
    payload[n] = static_cast<unsigned char>(10 + n);
  const fs::path path = dir.path / "imgs.idx";
  write_bytes(path, idx_bytes(0x00000803u, 3, 2, 2, payload));

  BenchmarkConfig cfg;
  DatasetSpec ds;
  ds.name = "tiny-images";
  ds.source = DataSource::IdxFile;
  ds.path = path.string();
  ds.batch_size = 3;
  cfg.datasets.push_back(ds);
  DecompositionSpec dec;
  dec.family = Family::Dedicom;
  dec.rank = 2;
  cfg.decompositions.push_back(dec);
  OptimizerConfig sgd = OptimizerConfig::defaults(OptFamily::Sgd);
  sgd.max_iter = 3;
  cfg.optimizers = {sgd};
  cfg.seeds = {5};
  cfg.fake_clock = true;

  const BenchmarkResult result = run_benchmark(cfg);
  REQUIRE(result.rows.size() == 1);
  CHECK(!result.rows[0].failed);
  CHECK(result.failures == 0);
}

TEST_CASE("benchmark covers the alternating and finite-sum optimizers") {
  BenchmarkConfig cfg = tiny_config();
  OptimizerConfig als = OptimizerConfig::defaults(OptFamily::Als);
  als.max_iter = 50;
  OptimizerConfig saga = OptimizerConfig::defaults(OptFamily::Saga);
  saga.max_iter = 20;
  cfg.optimizers = {als, saga};
  const BenchmarkResult result = run_benchmark(cfg);
  REQUIRE(result.rows.size() == 2);
  CHECK(!result.rows[0].failed);
  CHECK(!result.rows[1].failed);
  CHECK(result.rows[0].optimizer == "als");
  CHECK(result.rows[1].optimizer == "saga");
  CHECK(result.rows[0].report.final_loss <= result.rows[0].report.loss_history.front());
}

TEST_CASE("csv report has the exact schema and rounding") {
  BenchmarkResult result;
  CHECK(render_csv(result) ==
        "dataset,decomposition,optimizer,seed,batch_index,final_loss,iterations,"
        "wall_time_s,q,stop_reason\n");

  CellRow row;
  row.dataset = "synth4";
  row.decomposition = "cp";
  row.optimizer = "vechgrad";
  row.seed = 42;
  row.batch_index = 3;
  row.report.final_loss = 0.123456789;
  row.report.iterations = 17;
  row.report.wall_time_seconds = 1.23456;
  row.report.convergence_rate_q = 1.5554321;
  row.report.stop_reason = StopReason::LossBelowEps1;
  result.rows.push_back(row);

  const std::string csv = render_csv(result);
  const std::string line = csv.substr(csv.find('\n') + 1);
  CHECK(line == "synth4,cp,vechgrad,42,3,0.123457,17,1.235,1.55543,LOSS_BELOW_EPS1\n");

  CellRow failed = row;
  failed.failed = true;
  failed.error = "boom";
  failed.report = RunReport{};
  result.rows.push_back(failed);
  const std::string csv2 = render_csv(result);
  const std::string last = csv2.substr(csv2.rfind("synth4"));
  CHECK(last == "synth4,cp,vechgrad,42,3,,0,0.000,,FAILED\n");
}

TEST_CASE("json report mirrors the schema and optionally carries histories") {
  const BenchmarkConfig cfg = tiny_config();
  const BenchmarkResult result = run_benchmark(cfg);
  const std::string bare = render_json(result, false);
  const std::string with = render_json(result, true);
  CHECK(bare.find("\"rows\"") != std::string::npos);
  CHECK(bare.find("\"aggregates\"") != std::string::npos);
  CHECK(bare.find("\"loss_history\"") == std::string::npos);
  CHECK(with.find("\"loss_history\"") != std::string::npos);
  CHECK(bare.find("\"stop_reason\"") != std::string::npos);
}

TEST_CASE("reports write to disk and reject unwritable paths") {
  TempDir dir;
  const BenchmarkConfig cfg = tiny_config();
  const BenchmarkResult result = run_benchmark(cfg);
  const fs::path out = dir.path / "report.csv";
  emit_report(result, ReportFormat::Csv, out.string());
  CHECK(read_text(out) == render_csv(result));

  CHECK_THROWS_AS(
      emit_report(result, ReportFormat::Csv, (dir.path / "no-dir" / "report.csv").string()),
      std::runtime_error);

  CHECK(report_format_from_string("csv") == ReportFormat::Csv);
  CHECK(report_format_from_string("JSON") == ReportFormat::Json);
  CHECK(!report_format_from_string("xml").has_value());
}

TEST_CASE("seed mixing separates neighbouring cells") {
  CHECK(mix_seed(1, 0) != mix_seed(1, 1));
  CHECK(mix_seed(1, 0) != mix_seed(2, 0));
  CHECK(mix_seed(0, 0) != 0);
  CHECK(mix_seed(3, 4) == mix_seed(3, 4));
}
