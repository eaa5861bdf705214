#include "tdopt/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <memory>
#include <random>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <json.hpp>

#include "tdopt/als.hpp"
#include "tdopt/idx.hpp"

namespace tdopt {

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  std::uint64_t z = a ^ (b * 0x9e3779b97f4a7c15ull + 0x7f4a7c15ull);
  z += 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

Clock counting_clock() {
  auto ticks = std::make_shared<double>(0.0);
  return [ticks] { return (*ticks)++; };
}

SynthResult synthesize_tensor(const std::array<std::size_t, 3>& dims, Family family,
                              std::size_t rank, double noise_sigma, std::uint64_t seed,
                              std::size_t rank_q) {
  ModelSpec spec;
  spec.family = family;
  spec.dims = dims;
  spec.rank = rank;
  spec.rank_q = rank_q != 0 ? rank_q : rank;
  validate(spec);
  SynthResult out{DenseTensor(), init_random(spec, seed)};
  out.tensor = reconstruct(out.truth);
  if (noise_sigma > 0.0) {
    std::mt19937_64 eng(mix_seed(seed, 0x6e6f697365ull));
    std::normal_distribution<double> gauss(0.0, noise_sigma);
    for (std::size_t n = 0; n < out.tensor.size(); ++n) out.tensor.data()[n] += gauss(eng);
  }
  return out;
}

std::vector<DenseTensor> batch_dataset(const DenseTensor& t, std::size_t batch_size) {
  if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
  if (t.order() < 1) throw std::invalid_argument("cannot batch an empty tensor");
  const std::size_t count = t.dims()[0];
  const std::size_t stride = t.size() / count;  // entries per first-mode index
  std::vector<DenseTensor> out;
  out.reserve((count + batch_size - 1) / batch_size);
  for (std::size_t n0 = 0; n0 < count; n0 += batch_size) {
    const std::size_t n1 = std::min(count, n0 + batch_size);
    std::vector<std::size_t> dims = t.dims();
    dims[0] = n1 - n0;
    DenseTensor b(std::move(dims));
    std::memcpy(b.data(), t.data() + n0 * stride, (n1 - n0) * stride * sizeof(double));
    out.push_back(std::move(b));
  }
  return out;
}

std::optional<double> convergence_rate(const std::vector<double>& history,
                                       std::size_t last_windows) {
  if (history.size() < 4) return std::nullopt;
  std::vector<double> diffs(history.size() - 1);
  for (std::size_t t = 0; t + 1 < history.size(); ++t) diffs[t] = history[t + 1] - history[t];

  std::vector<double> rates;
  for (std::size_t t = 2; t < diffs.size(); ++t) {
    const double d0 = diffs[t - 2], d1 = diffs[t - 1], d2 = diffs[t];
    if (d0 == 0.0 || d1 == 0.0 || d2 == 0.0) continue;
    if (!std::isfinite(d0) || !std::isfinite(d1) || !std::isfinite(d2)) continue;
    const double q = std::log(std::abs(d2 / d1)) / std::log(std::abs(d1 / d0));
    if (!std::isfinite(q)) continue;
    rates.push_back(q);
  }
  if (rates.empty()) return std::nullopt;
  if (last_windows > 0 && rates.size() > last_windows)
    rates.erase(rates.begin(), rates.end() - static_cast<std::ptrdiff_t>(last_windows));
  double sum = 0.0;
  for (double q : rates) sum += q;
  return sum / static_cast<double>(rates.size());
}

namespace {

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

using nlohmann::json;

[[noreturn]] void config_error(const std::string& msg) { throw std::invalid_argument(msg); }

void check_keys(const json& j, std::initializer_list<const char*> allowed, const char* where) {
  for (const auto& item : j.items()) {
    bool known = false;
    for (const char* k : allowed)
      if (item.key() == k) {
        known = true;
        break;
      }
    if (!known) config_error(std::string("unknown key \"") + item.key() + "\" in " + where);
  }
}

DataSource parse_source(const std::string& s) {
  const std::string v = lower(s);
  if (v == "idx" || v == "idx_file") return DataSource::IdxFile;
  if (v == "raw" || v == "raw_gray_dir") return DataSource::RawGrayDir;
  if (v == "synthetic" || v == "synth") return DataSource::Synthetic;
  config_error("unknown dataset source \"" + s + "\"");
}

Family parse_family(const json& j, const char* where) {
  const auto s = j.get<std::string>();
  const auto fam = decomposition_from_string(lower(s));
  if (!fam) config_error(std::string("unknown decomposition family \"") + s + "\" in " + where);
  return *fam;
}

DatasetSpec parse_dataset(const json& j) {
  check_keys(j,
             {"name", "source", "path", "dims", "family", "true_rank", "true_rank_q",
              "noise_sigma", "seed", "batch_size"},
             "dataset");
  DatasetSpec d;
  if (!j.contains("name")) config_error("dataset entry needs a name");
  d.name = j.at("name").get<std::string>();
  if (j.contains("source")) d.source = parse_source(j.at("source").get<std::string>());
  if (d.source != DataSource::Synthetic) {
    if (!j.contains("path")) config_error("dataset \"" + d.name + "\" needs a path");
    d.path = j.at("path").get<std::string>();
  }
  if (j.contains("dims")) {
    const auto dims = j.at("dims").get<std::vector<std::size_t>>();
    if (dims.size() != 3) config_error("dataset \"" + d.name + "\" dims must have 3 entries");
    std::copy(dims.begin(), dims.end(), d.dims.begin());
  }
  if (j.contains("family")) d.truth_family = parse_family(j.at("family"), "dataset");
  if (j.contains("true_rank")) d.true_rank = j.at("true_rank").get<std::size_t>();
  if (j.contains("true_rank_q")) d.true_rank_q = j.at("true_rank_q").get<std::size_t>();
  if (j.contains("noise_sigma")) d.noise_sigma = j.at("noise_sigma").get<double>();
  if (j.contains("seed")) d.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("batch_size")) d.batch_size = j.at("batch_size").get<std::size_t>();
  return d;
}

DecompositionSpec parse_decomposition(const json& j) {
  check_keys(j, {"family", "rank", "rank_q"}, "decomposition");
  DecompositionSpec d;
  if (!j.contains("family")) config_error("decomposition entry needs a family");
  d.family = parse_family(j.at("family"), "decomposition");
  if (j.contains("rank")) d.rank = j.at("rank").get<std::size_t>();
  if (j.contains("rank_q")) d.rank_q = j.at("rank_q").get<std::size_t>();
  return d;
}

OptimizerConfig parse_optimizer(const json& j) {
  check_keys(j,
             {"family", "lr", "momentum", "beta1", "beta2", "eps", "history", "cg_max_iter",
              "cg_sigma", "eps1", "eps2", "max_iter", "decrease_tol", "grad_eta", "seed", "wolfe"},
             "optimizer");
  if (!j.contains("family")) config_error("optimizer entry needs a family");
  const auto s = j.at("family").get<std::string>();
  const auto fam = family_from_string(lower(s));
  if (!fam) config_error("unknown optimizer family \"" + s + "\"");
  OptimizerConfig cfg = OptimizerConfig::defaults(*fam);
  if (j.contains("lr")) cfg.lr = j.at("lr").get<double>();
  if (j.contains("momentum")) cfg.momentum = j.at("momentum").get<double>();
  if (j.contains("beta1")) cfg.beta1 = j.at("beta1").get<double>();
  if (j.contains("beta2")) cfg.beta2 = j.at("beta2").get<double>();
  if (j.contains("eps")) cfg.eps = j.at("eps").get<double>();
  if (j.contains("history")) cfg.history = j.at("history").get<int>();
  if (j.contains("cg_max_iter")) cfg.cg_max_iter = j.at("cg_max_iter").get<int>();
  if (j.contains("cg_sigma")) cfg.cg_sigma = j.at("cg_sigma").get<double>();
  if (j.contains("eps1")) cfg.eps1 = j.at("eps1").get<double>();
  if (j.contains("eps2")) cfg.eps2 = j.at("eps2").get<double>();
  if (j.contains("max_iter")) cfg.max_iter = j.at("max_iter").get<long>();
  if (j.contains("decrease_tol")) cfg.decrease_tol = j.at("decrease_tol").get<double>();
  if (j.contains("grad_eta")) cfg.grad_eta = j.at("grad_eta").get<double>();
  if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("wolfe")) {
    const json& w = j.at("wolfe");
    check_keys(w, {"c1", "c2", "alpha_init", "alpha_max", "max_evals"}, "wolfe");
    if (w.contains("c1")) cfg.wolfe.c1 = w.at("c1").get<double>();
    if (w.contains("c2")) cfg.wolfe.c2 = w.at("c2").get<double>();
    if (w.contains("alpha_init")) cfg.wolfe.alpha_init = w.at("alpha_init").get<double>();
    if (w.contains("alpha_max")) cfg.wolfe.alpha_max = w.at("alpha_max").get<double>();
    if (w.contains("max_evals")) cfg.wolfe.max_evals = w.at("max_evals").get<int>();
  }
  return cfg;
}

}  // namespace

std::optional<std::size_t> default_batch_size(const std::string& dataset_name) {
  const std::string n = lower(dataset_name);
  if (n == "mnist" || n == "cifar-10" || n == "cifar10" || n == "cifar-100" || n == "cifar100")
    return 64;
  if (n == "coco" || n == "lfw") return 32;
  return std::nullopt;
}

BenchmarkConfig parse_config_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    config_error(std::string("config is not valid JSON: ") + e.what());
  }
  try {
    check_keys(j, {"datasets", "decompositions", "optimizers", "seeds", "max_batches", "workers",
                   "fake_clock"},
               "config");
    BenchmarkConfig cfg;
    if (!j.contains("datasets") || !j.at("datasets").is_array() || j.at("datasets").empty())
      config_error("config needs a non-empty datasets list");
    for (const json& d : j.at("datasets")) cfg.datasets.push_back(parse_dataset(d));
    if (!j.contains("decompositions") || !j.at("decompositions").is_array() ||
        j.at("decompositions").empty())
      config_error("config needs a non-empty decompositions list");
    for (const json& d : j.at("decompositions"))
      cfg.decompositions.push_back(parse_decomposition(d));
    if (!j.contains("optimizers") || !j.at("optimizers").is_array() || j.at("optimizers").empty())
      config_error("config needs a non-empty optimizers list");
    for (const json& o : j.at("optimizers")) cfg.optimizers.push_back(parse_optimizer(o));
    if (!j.contains("seeds") || !j.at("seeds").is_array() || j.at("seeds").empty())
      config_error("config needs a non-empty seeds list");
    cfg.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    if (j.contains("max_batches")) cfg.max_batches = j.at("max_batches").get<std::size_t>();
    if (j.contains("workers")) cfg.workers = j.at("workers").get<int>();
    if (j.contains("fake_clock")) cfg.fake_clock = j.at("fake_clock").get<bool>();
    return cfg;
  } catch (const json::exception& e) {
    config_error(std::string("bad config value: ") + e.what());
  }
}

BenchmarkConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) config_error("cannot open config " + path);
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config_json(text.str());
}

DenseTensor first_mode_last(const DenseTensor& t) {
  if (t.order() != 3) throw std::invalid_argument("re-orientation expects a third-order tensor");
  const auto& d = t.dims();
  DenseTensor out({d[1], d[2], d[0]});
  for (std::size_t n = 0; n < d[0]; ++n)
    for (std::size_t i = 0; i < d[1]; ++i)
      for (std::size_t j = 0; j < d[2]; ++j) out(i, j, n) = t(n, i, j);
  return out;
}

namespace {

struct CellJob {
  std::size_t ds = 0, dec = 0, opt = 0, seed_idx = 0, batch = 0;
  const DenseTensor* tensor = nullptr;
};

struct PreparedDataset {
  // File sources share one batch list across seeds; synthetic sources draw a
  // fresh instance per grid seed.
  std::vector<DenseTensor> shared;
  std::vector<std::vector<DenseTensor>> by_seed;
  std::size_t batch_count = 0;

  const DenseTensor& batch(std::size_t seed_idx, std::size_t b) const {
    return by_seed.empty() ? shared[b] : by_seed[seed_idx][b];
  }
};

std::size_t resolve_batch_size(const DatasetSpec& ds) {
  if (ds.batch_size > 0) return ds.batch_size;
  if (ds.source == DataSource::Synthetic) return ds.dims[0];
  const auto known = default_batch_size(ds.name);
  if (!known)
    throw std::invalid_argument("dataset \"" + ds.name +
                                "\" needs an explicit batch_size (name has no default)");
  return *known;
}

PreparedDataset prepare_dataset(const DatasetSpec& ds, const std::vector<std::uint64_t>& seeds,
                                std::size_t max_batches) {
  PreparedDataset out;
  const std::size_t bs = resolve_batch_size(ds);
  auto cap = [max_batches](std::vector<DenseTensor>& batches) {
    if (max_batches > 0 && batches.size() > max_batches) batches.resize(max_batches);
  };
  if (ds.source == DataSource::Synthetic) {
    out.by_seed.reserve(seeds.size());
    for (std::uint64_t seed : seeds) {
      SynthResult sr = synthesize_tensor(ds.dims, ds.truth_family, ds.true_rank, ds.noise_sigma,
                                         mix_seed(ds.seed, seed), ds.true_rank_q);
      std::vector<DenseTensor> batches = batch_dataset(sr.tensor, bs);
      cap(batches);
      out.by_seed.push_back(std::move(batches));
    }
    out.batch_count = out.by_seed.front().size();
  } else {
    const DenseTensor whole =
        ds.source == DataSource::IdxFile ? load_idx(ds.path) : load_raw_gray_dir(ds.path);
    out.shared = batch_dataset(whole, bs);
    cap(out.shared);
    out.batch_count = out.shared.size();
  }
  return out;
}

CellRow run_cell(const BenchmarkConfig& cfg, const CellJob& job) {
  const DatasetSpec& ds = cfg.datasets[job.ds];
  const DecompositionSpec& dec = cfg.decompositions[job.dec];
  CellRow row;
  row.dataset = ds.name;
  row.decomposition = to_string(dec.family);
  row.optimizer = to_string(cfg.optimizers[job.opt].family);
  row.seed = cfg.seeds[job.seed_idx];
  row.batch_index = job.batch;
  try {
    // Image batches arrive as (images, px, px); the square-slice family
    // decomposes them as (px, px, images) instead.
    DenseTensor oriented;
    const DenseTensor* target = job.tensor;
    if (dec.family == Family::Dedicom && ds.source != DataSource::Synthetic) {
      oriented = first_mode_last(*target);
      target = &oriented;
    }

    ModelSpec spec;
    spec.family = dec.family;
    std::copy(target->dims().begin(), target->dims().end(), spec.dims.begin());
    spec.rank = dec.rank;
    spec.rank_q = dec.rank_q;
    validate(spec);

    const std::uint64_t cell_seed = mix_seed(row.seed, job.batch);
    OptimizerConfig opt = cfg.optimizers[job.opt];
    opt.seed = mix_seed(opt.seed, cell_seed);
    const Eigen::VectorXd x0 = init_random(spec, cell_seed).values;
    const Clock clock = cfg.fake_clock ? counting_clock() : steady_clock_fn();

    SolveResult solved;
    if (opt.family == OptFamily::Als) {
      solved = als_solve(spec, *target, x0, opt, clock);
    } else if (opt.family == OptFamily::Saga) {
      const Objective f = make_objective(spec, *target);
      const SumObjective parts = make_slice_squared_objectives(spec, *target);
      solved = run_until_convergence(f, x0, opt, clock, &parts);
    } else {
      const Objective f = make_objective(spec, *target);
      solved = run_until_convergence(f, x0, opt, clock);
    }
    row.report = std::move(solved.report);
    row.report.convergence_rate_q = convergence_rate(row.report.loss_history);
  } catch (const std::exception& e) {
    row.failed = true;
    row.error = e.what();
    row.report = RunReport{};
  }
  return row;
}

}  // namespace

BenchmarkResult run_benchmark(const BenchmarkConfig& cfg) {
  if (cfg.datasets.empty() || cfg.decompositions.empty() || cfg.optimizers.empty() ||
      cfg.seeds.empty())
    throw std::invalid_argument("benchmark needs datasets, decompositions, optimizers, seeds");

  // Data with loading excluded from the timed region below.
  std::vector<PreparedDataset> prepared;
  prepared.reserve(cfg.datasets.size());
  for (const DatasetSpec& ds : cfg.datasets)
    prepared.push_back(prepare_dataset(ds, cfg.seeds, cfg.max_batches));

  std::vector<CellJob> jobs;
  for (std::size_t ds = 0; ds < cfg.datasets.size(); ++ds)
    for (std::size_t dec = 0; dec < cfg.decompositions.size(); ++dec)
      for (std::size_t opt = 0; opt < cfg.optimizers.size(); ++opt)
        for (std::size_t s = 0; s < cfg.seeds.size(); ++s)
          for (std::size_t b = 0; b < prepared[ds].batch_count; ++b)
            jobs.push_back(CellJob{ds, dec, opt, s, b, &prepared[ds].batch(s, b)});

  BenchmarkResult result;
  result.rows.resize(jobs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= jobs.size()) return;
      result.rows[i] = run_cell(cfg, jobs[i]);
    }
  };
  const int workers = std::clamp(cfg.workers, 1, 64);
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }

  // Aggregates keyed by grid position, so rows stay distinct even when two
  // entries share a display name.
  std::size_t row_at = 0;
  for (std::size_t ds = 0; ds < cfg.datasets.size(); ++ds)
    for (std::size_t dec = 0; dec < cfg.decompositions.size(); ++dec)
      for (std::size_t opt = 0; opt < cfg.optimizers.size(); ++opt) {
        AggregateRow agg;
        agg.dataset = cfg.datasets[ds].name;
        agg.decomposition = to_string(cfg.decompositions[dec].family);
        agg.optimizer = to_string(cfg.optimizers[opt].family);
        double loss_sum = 0.0, time_sum = 0.0, q_sum = 0.0;
        std::size_t q_count = 0;
        for (std::size_t s = 0; s < cfg.seeds.size(); ++s)
          for (std::size_t b = 0; b < prepared[ds].batch_count; ++b) {
            const CellRow& row = result.rows[row_at++];
            if (row.failed) {
              ++agg.failures;
              continue;
            }
            ++agg.cells;
            loss_sum += row.report.final_loss;
            time_sum += row.report.wall_time_seconds;
            if (row.report.convergence_rate_q) {
              q_sum += *row.report.convergence_rate_q;
              ++q_count;
            }
          }
        if (agg.cells > 0) {
          agg.mean_final_loss = loss_sum / static_cast<double>(agg.cells);
          agg.mean_wall_time = time_sum / static_cast<double>(agg.cells);
        }
        if (q_count > 0) agg.mean_q = q_sum / static_cast<double>(q_count);
        result.failures += agg.failures;
        result.aggregates.push_back(std::move(agg));
      }
  return result;
}

}  // namespace tdopt
