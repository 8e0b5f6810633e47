// SPDX-License-Identifier: Apache-2.0
#pragma once

// Multi-seed orchestration: length sweeps (success counts and steps to
// success per length), the maximum tolerable initial noise rate per length,
// and the per-figure CSV files.
//
// Runs are independent and may execute on a bounded pool of workers; results
// are always returned in canonical (length, rho0, seed) order.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "paritylab/config.hpp"
#include "paritylab/error.hpp"
#include "paritylab/records.hpp"
#include "paritylab/trainer.hpp"

namespace paritylab {

/// Called after each finished run; may be invoked from worker threads, but
/// never concurrently.
using RunCallback = std::function<void(const RunRecord&)>;

/// Same configuration with the bitstring length replaced.
inline TrainConfig with_length(TrainConfig config, std::size_t n) {
  if (config.sampler.kind == SamplerKind::nim_trajectory) {
    throw DomainError("length sweeps need a bitstring sampler, not nim_trajectory");
  }
  config.sampler = SamplerSpec::bits(config.sampler.kind, n);
  return config;
}

/// Trains every config, at most `parallelism` at a time. Output order matches
/// input order regardless of completion order.
inline std::vector<RunRecord> run_all(const std::vector<TrainConfig>& configs, std::size_t parallelism,
                                      const RunCallback& on_run = {}) {
  std::vector<RunRecord> records(configs.size());
  std::atomic<std::size_t> next{0};
  std::mutex callback_mutex;
  std::exception_ptr failure;
  auto worker = [&] {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= configs.size()) return;
      try {
        records[i] = train(configs[i]);
        if (on_run) {
          std::lock_guard lock(callback_mutex);
          on_run(records[i]);
        }
      } catch (...) {
        std::lock_guard lock(callback_mutex);
        if (!failure) failure = std::current_exception();
        next = configs.size();
      }
    }
  };
  const std::size_t workers = std::clamp<std::size_t>(parallelism, 1, std::max<std::size_t>(configs.size(), 1));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);
  return records;
}

inline std::size_t default_parallelism() noexcept { return std::max(1U, std::thread::hardware_concurrency()); }

struct SweepSpec {
  std::vector<std::size_t> lengths;
  std::vector<std::uint64_t> seeds;
  TrainConfig base;
  std::size_t parallelism = 1;

  void validate() const {
    if (lengths.empty()) throw DomainError("sweep needs at least one length");
    if (seeds.empty()) throw DomainError("sweep needs at least one seed");
    for (auto n : lengths) {
      if (n < 1) throw DomainError("lengths must be >= 1");
    }
    if (std::set<std::uint64_t>(seeds.begin(), seeds.end()).size() != seeds.size()) {
      throw DomainError("seeds must be distinct");
    }
    base.validate();
  }
};

/// One run per (length, seed), ordered by length then seed.
inline std::vector<RunRecord> sweep_lengths(const SweepSpec& spec, const RunCallback& on_run = {}) {
  spec.validate();
  auto lengths = spec.lengths;
  std::sort(lengths.begin(), lengths.end());
  lengths.erase(std::unique(lengths.begin(), lengths.end()), lengths.end());
  auto seeds = spec.seeds;
  std::sort(seeds.begin(), seeds.end());
  std::vector<TrainConfig> configs;
  for (auto n : lengths) {
    for (auto seed : seeds) {
      auto config = with_length(spec.base, n);
      config.master_seed = seed;
      configs.push_back(std::move(config));
    }
  }
  return run_all(configs, spec.parallelism, on_run);
}

struct LengthAggregate {
  std::size_t length = 0;
  std::size_t runs = 0;
  std::size_t successes = 0;
  std::size_t aborted = 0;
  std::vector<std::uint64_t> steps_to_success; ///< ascending

  std::optional<double> median_steps() const {
    if (steps_to_success.empty()) return std::nullopt;
    const auto m = steps_to_success.size();
    if (m % 2 == 1) return static_cast<double>(steps_to_success[m / 2]);
    return 0.5 * (static_cast<double>(steps_to_success[m / 2 - 1]) + static_cast<double>(steps_to_success[m / 2]));
  }
};

inline std::vector<LengthAggregate> aggregate_by_length(std::span<const RunSummary> runs) {
  std::map<std::size_t, LengthAggregate> by_length;
  for (const auto& r : runs) {
    auto& agg = by_length[r.length];
    agg.length = r.length;
    ++agg.runs;
    if (r.outcome == Outcome::success) {
      ++agg.successes;
      agg.steps_to_success.push_back(*r.steps_to_success);
    }
    if (r.outcome == Outcome::aborted) ++agg.aborted;
  }
  std::vector<LengthAggregate> out;
  for (auto& [n, agg] : by_length) {
    std::sort(agg.steps_to_success.begin(), agg.steps_to_success.end());
    out.push_back(std::move(agg));
  }
  return out;
}

inline std::vector<RunSummary> summarize(std::span<const RunRecord> records) {
  std::vector<RunSummary> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(RunSummary::of(r));
  return out;
}

struct NoiseSearchSpec {
  std::size_t length = 20;
  std::vector<std::uint64_t> seeds;
  double granularity = 0.05;
  double success_rule = 0.5; ///< minimum fraction of seeds that must succeed
  TrainConfig base;
  std::size_t parallelism = 1;

  void validate() const {
    if (length < 1) throw DomainError("length must be >= 1");
    if (seeds.empty()) throw DomainError("noise search needs at least one seed");
    if (std::set<std::uint64_t>(seeds.begin(), seeds.end()).size() != seeds.size()) {
      throw DomainError("seeds must be distinct");
    }
    if (!(granularity > 0.0 && granularity <= 0.5)) throw DomainError("granularity must lie in (0, 0.5]");
    if (!(success_rule > 0.0 && success_rule <= 1.0)) throw DomainError("success rule must lie in (0, 1]");
    base.validate();
  }
};

struct GridPoint {
  std::size_t length = 0;
  double rho0 = 0;
  std::size_t runs = 0;
  std::size_t successes = 0;
  bool passed = false;
};

struct NoiseSearchResult {
  std::size_t length = 0;
  double rho_max = 0;
  std::vector<GridPoint> grid;
  std::vector<RunRecord> records;
};

/// k * granularity, snapped to a 1e-9 lattice so grid values print cleanly
/// (3 * 0.05 is 0.15, not 0.15000000000000002).
inline double grid_value(std::size_t k, double granularity) {
  return std::round(static_cast<double>(k) * granularity * 1e9) / 1e9;
}

inline bool passes(std::size_t successes, std::size_t runs, double success_rule) noexcept {
  return static_cast<double>(successes) >= success_rule * static_cast<double>(runs);
}

/// Walks rho0 = 0, g, 2g, ... and stops at the first grid value where fewer
/// than `success_rule` of the seeds succeed. Returns the last passing value,
/// or 0 when rho0 = 0 itself fails.
inline NoiseSearchResult max_noise_search(const NoiseSearchSpec& spec, const RunCallback& on_run = {},
                                          const std::function<void(const GridPoint&)>& on_grid_point = {}) {
  spec.validate();
  NoiseSearchResult result;
  result.length = spec.length;
  auto seeds = spec.seeds;
  std::sort(seeds.begin(), seeds.end());
  for (std::size_t k = 0;; ++k) {
    const double rho0 = grid_value(k, spec.granularity);
    if (rho0 > 1.0) break;
    std::vector<TrainConfig> configs;
    for (auto seed : seeds) {
      auto config = with_length(spec.base, spec.length);
      config.schedule.rho0 = rho0;
      config.master_seed = seed;
      configs.push_back(std::move(config));
    }
    auto records = run_all(configs, spec.parallelism, on_run);
    GridPoint point{spec.length, rho0, records.size(), 0, false};
    for (const auto& r : records) point.successes += r.outcome == Outcome::success ? 1 : 0;
    point.passed = passes(point.successes, point.runs, spec.success_rule);
    result.grid.push_back(point);
    if (on_grid_point) on_grid_point(point);
    for (auto& r : records) result.records.push_back(std::move(r));
    if (!point.passed) break;
    result.rho_max = rho0;
  }
  return result;
}

inline Json to_json(const GridPoint& p, double success_rule) {
  return {{"type", "grid_point"}, {"length", p.length},       {"rho0", p.rho0},
          {"runs", p.runs},       {"successes", p.successes}, {"success_rule", success_rule},
          {"passed", p.passed}};
}

inline GridPoint grid_point_from_json(const Json& j) {
  GridPoint p;
  p.length = j.at("length").get<std::size_t>();
  p.rho0 = j.at("rho0").get<double>();
  p.runs = j.at("runs").get<std::size_t>();
  p.successes = j.at("successes").get<std::size_t>();
  p.passed = j.at("passed").get<bool>();
  return p;
}

/// rho_max per length from logged grid points: the largest rho0 below the
/// first failing grid value of each length.
inline std::vector<std::pair<std::size_t, double>> rho_max_from_grid(std::vector<GridPoint> grid) {
  std::sort(grid.begin(), grid.end(), [](const GridPoint& a, const GridPoint& b) {
    return a.length != b.length ? a.length < b.length : a.rho0 < b.rho0;
  });
  std::vector<std::pair<std::size_t, double>> out;
  for (std::size_t i = 0; i < grid.size();) {
    const std::size_t n = grid[i].length;
    double rho_max = 0;
    bool stopped = false;
    for (; i < grid.size() && grid[i].length == n; ++i) {
      if (stopped) continue;
      if (!grid[i].passed) {
        stopped = true;
      } else {
        rho_max = grid[i].rho0;
      }
    }
    out.emplace_back(n, rho_max);
  }
  return out;
}

// CSV files -----------------------------------------------------------------

using CsvTable = std::vector<std::vector<std::string>>;

inline void write_csv(const std::filesystem::path& path, const CsvTable& rows) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  for (const auto& row : rows) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c > 0) out << ',';
      out << row[c];
    }
    out << '\n';
  }
  if (!out) throw IoError("failed writing " + path.string());
}

inline CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  CsvTable rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> row;
    for (auto cell : split(line, ',')) row.emplace_back(cell);
    rows.push_back(std::move(row));
  }
  return rows;
}

/// fig1a: length,success_count
inline CsvTable fig1a_table(std::span<const LengthAggregate> aggregates) {
  CsvTable t{{"length", "success_count"}};
  for (const auto& a : aggregates) t.push_back({std::to_string(a.length), std::to_string(a.successes)});
  return t;
}

/// fig1b: length,seed,steps_to_success (successful runs only)
inline CsvTable fig1b_table(std::span<const RunSummary> runs) {
  std::vector<RunSummary> sorted(runs.begin(), runs.end());
  std::sort(sorted.begin(), sorted.end(),
            [](const RunSummary& a, const RunSummary& b) { return std::tie(a.length, a.seed) < std::tie(b.length, b.seed); });
  CsvTable t{{"length", "seed", "steps_to_success"}};
  for (const auto& r : sorted) {
    if (r.outcome != Outcome::success) continue;
    t.push_back({std::to_string(r.length), std::to_string(r.seed), std::to_string(*r.steps_to_success)});
  }
  return t;
}

/// fig3: length,rho_max
inline CsvTable fig3_table(std::span<const std::pair<std::size_t, double>> rho_max) {
  CsvTable t{{"length", "rho_max"}};
  for (const auto& [n, rho] : rho_max) t.push_back({std::to_string(n), format_double(rho)});
  return t;
}

/// Writes fig1a.csv and fig1b.csv for a set of runs into `dir`.
inline void export_csv(std::span<const RunSummary> runs, const std::filesystem::path& dir) {
  if (runs.empty()) throw DomainError("nothing to export: no runs");
  std::filesystem::create_directories(dir);
  const auto aggregates = aggregate_by_length(runs);
  write_csv(dir / "fig1a.csv", fig1a_table(aggregates));
  write_csv(dir / "fig1b.csv", fig1b_table(runs));
}

/// Writes fig3.csv into `dir`.
inline void export_csv(std::span<const std::pair<std::size_t, double>> rho_max, const std::filesystem::path& dir) {
  if (rho_max.empty()) throw DomainError("nothing to export: no noise-search results");
  std::filesystem::create_directories(dir);
  write_csv(dir / "fig3.csv", fig3_table(rho_max));
}

} // namespace paritylab
