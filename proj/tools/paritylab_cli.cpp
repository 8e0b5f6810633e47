// SPDX-License-Identifier: Apache-2.0
//
// paritylab: command-line front end.
//
//   paritylab parity 110m0
//   paritylab nim eval --heaps 1,2,3 [--capacity C]
//   paritylab datagen sample --kind latent_curriculum --n 20 --count 5 --seed 1
//   paritylab gradcheck [--instances 20]
//   paritylab train --kind latent_curriculum --n 20 --rho0 0.2 --seed 7
//   paritylab sweep --lengths 10,20 --seeds 1-10 --max-steps 300000
//   paritylab noise-search --lengths 10,15,20 --seeds 1-10 --granularity 0.05
//   paritylab export --log runs.jsonl --out plots/
//
// Default output directory: $PARITYLAB_OUT_DIR, else the working directory.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "paritylab/paritylab.hpp"

namespace fs = std::filesystem;
using namespace paritylab;

namespace {

fs::path default_out_dir() {
  if (const char* env = std::getenv("PARITYLAB_OUT_DIR"); env != nullptr && *env != '\0') return env;
  return fs::current_path();
}

/// Training flags shared by train, sweep and noise-search. Every flag maps to
/// a config key; flags override values loaded from --config.
struct TrainFlags {
  std::string config_file;
  std::map<std::string, std::string> values;

  void add(CLI::App& app) {
    app.add_option("--config", config_file, "key=value config file (flags override it)");
    option(app, "--kind", "kind", "sampler: uniform01, latent_curriculum, variable_length, nim_trajectory");
    option(app, "--n", "n", "bitstring length (maximum length for variable_length)");
    option(app, "--heaps", "heaps", "nim start position, e.g. 5,5,5");
    option(app, "--capacity", "capacity", "nim counters per heap block");
    option(app, "--scrambled", "scrambled", "scramble counters within nim heap blocks (true/false)");
    option(app, "--rho0", "rho0", "initial label-noise fraction");
    option(app, "--noise-mode", "noise_mode", "exact or bernoulli");
    option(app, "--noise-feedback", "noise_feedback", "accuracy driving the noise rate: latest or best");
    option(app, "--batch-size", "batch_size", "minibatch size (default 128)");
    option(app, "--max-steps", "max_steps", "step budget (default 7500000)");
    option(app, "--threshold", "success_threshold", "test accuracy that counts as success (default 0.95)");
    option(app, "--eval-interval", "eval_interval", "steps between evaluations (default 1000)");
    option(app, "--test-size", "test_set_size", "held-out test set size (default 10000)");
    option(app, "--dataset-size", "dataset_size", "train on a fixed dataset of this size (0 = online)");
    option(app, "--lr", "lr", "SGD learning rate (default 0.5)");
    option(app, "--momentum", "momentum", "SGD momentum (default 0)");
    option(app, "--hidden", "hidden", "LSTM hidden size (default 16)");
    option(app, "--encoding", "encoding", "input encoding: scalar or one_hot");
    option(app, "--precision", "precision", "float32 or float64");
  }

  void option(CLI::App& app, const std::string& flag, const std::string& key, const std::string& help) {
    app.add_option_function<std::string>(flag, [this, key](const std::string& v) { values[key] = v; }, help);
  }

  KeyValues key_values() const {
    KeyValues kv = config_file.empty() ? KeyValues{} : KeyValues::load(config_file);
    for (const auto& [k, v] : values) kv.set(k, v);
    return kv;
  }

  TrainConfig config() const { return TrainConfig::from_key_values(key_values()); }
};

std::string format_moves(const std::vector<nim::Move>& moves) {
  std::string out = "[";
  for (std::size_t i = 0; i < moves.size(); ++i) {
    if (i > 0) out += ", ";
    out += "(" + std::to_string(moves[i].heap) + ", " + std::to_string(moves[i].take) + ")";
  }
  return out + "]";
}

void print_aggregates(const std::vector<LengthAggregate>& aggregates) {
  std::cout << "length  runs  success  aborted  median_steps\n";
  for (const auto& a : aggregates) {
    const auto median = a.median_steps();
    std::cout << a.length << "  " << a.runs << "  " << a.successes << "  " << a.aborted << "  "
              << (median ? format_double(*median) : "-") << "\n";
  }
}

std::vector<std::size_t> to_sizes(const std::vector<std::uint64_t>& v) { return {v.begin(), v.end()}; }

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Parity learning under accuracy-coupled label noise"};
  app.require_subcommand(1);

  // parity
  auto* parity_cmd = app.add_subcommand("parity", "parity and Hamming weight of a bitstring literal (1, 0, m=-1)");
  std::string literal;
  parity_cmd->add_option("bits", literal, "bitstring literal, e.g. 110m0")->required();

  // nim eval
  auto* nim_cmd = app.add_subcommand("nim", "Nim position tools");
  nim_cmd->require_subcommand(1);
  auto* nim_eval = nim_cmd->add_subcommand("eval", "grundy value, winning flag, winning moves, board encoding");
  std::string heaps_text;
  unsigned capacity = 0;
  bool use_oracle = false;
  nim_eval->add_option("--heaps", heaps_text, "heap sizes, e.g. 1,2,3")->required();
  nim_eval->add_option("--capacity", capacity, "counters per heap block (default: largest heap)");
  nim_eval->add_flag("--oracle", use_oracle, "also compute the mex-recursion grundy value");

  // datagen sample
  auto* datagen_cmd = app.add_subcommand("datagen", "data generation");
  datagen_cmd->require_subcommand(1);
  auto* sample_cmd = datagen_cmd->add_subcommand("sample", "one bitstring literal and label per line");
  std::string kind_name = "latent_curriculum";
  std::size_t sample_n = 20;
  std::size_t count = 10;
  std::uint64_t sample_seed = 0;
  std::string sample_heaps;
  unsigned sample_capacity = 0;
  bool sample_scrambled = false;
  sample_cmd->add_option("--kind", kind_name, "uniform01, latent_curriculum, variable_length, nim_trajectory");
  sample_cmd->add_option("--n", sample_n, "length (maximum length for variable_length)");
  sample_cmd->add_option("--count", count, "number of examples")->check(CLI::PositiveNumber);
  sample_cmd->add_option("--seed", sample_seed, "seed");
  sample_cmd->add_option("--heaps", sample_heaps, "nim start position (nim_trajectory)");
  sample_cmd->add_option("--capacity", sample_capacity, "nim counters per heap block");
  sample_cmd->add_flag("--scrambled", sample_scrambled, "scramble counters within heap blocks");

  // gradcheck
  auto* grad_cmd = app.add_subcommand("gradcheck", "BPTT gradients vs central finite differences");
  std::size_t instances = 20;
  std::uint64_t grad_seed = 1;
  double fd_step = 1e-5;
  double tolerance = 1e-4;
  grad_cmd->add_option("--instances", instances, "random instances (hidden 2/4, length 3/8)");
  grad_cmd->add_option("--seed", grad_seed, "seed");
  grad_cmd->add_option("--step", fd_step, "finite-difference step");
  grad_cmd->add_option("--tolerance", tolerance, "maximum allowed relative error");

  // train
  auto* train_cmd = app.add_subcommand("train", "one training run; prints the run record as JSON");
  TrainFlags train_flags;
  train_flags.add(*train_cmd);
  std::optional<std::uint64_t> train_seed;
  std::string log_path;
  std::string checkpoint_path;
  bool progress = false;
  train_cmd->add_option("--seed", train_seed, "master seed");
  train_cmd->add_option("--log", log_path, "JSONL log to append a summary to (default $PARITYLAB_OUT_DIR/runs.jsonl)");
  train_cmd->add_option("--checkpoint", checkpoint_path, "write final parameters here");
  train_cmd->add_flag("--progress", progress, "print each evaluation to stderr");

  // sweep
  auto* sweep_cmd = app.add_subcommand("sweep", "runs per (length, seed); writes fig1a.csv and fig1b.csv");
  TrainFlags sweep_flags;
  sweep_flags.add(*sweep_cmd);
  std::string lengths_text = "10,20";
  std::string seeds_text = "1-10";
  std::size_t parallel = default_parallelism();
  std::string out_dir;
  sweep_cmd->add_option("--lengths", lengths_text, "bitstring lengths, e.g. 10,20");
  sweep_cmd->add_option("--seeds", seeds_text, "seeds, e.g. 1-10 or 1,2,5");
  sweep_cmd->add_option("--parallel", parallel, "concurrent runs")->check(CLI::PositiveNumber);
  sweep_cmd->add_option("--out", out_dir, "output directory (default $PARITYLAB_OUT_DIR)");
  sweep_cmd->add_flag("--progress", progress, "print each finished run to stderr");

  // noise-search
  auto* noise_cmd = app.add_subcommand("noise-search", "largest tolerable rho0 per length; writes fig3.csv");
  TrainFlags noise_flags;
  noise_flags.add(*noise_cmd);
  double granularity = 0.05;
  double success_rule = 0.5;
  noise_cmd->add_option("--lengths", lengths_text, "bitstring lengths, e.g. 10,15,20");
  noise_cmd->add_option("--seeds", seeds_text, "seeds, e.g. 1-10");
  noise_cmd->add_option("--granularity", granularity, "rho0 grid step (default 0.05)");
  noise_cmd->add_option("--success-rule", success_rule, "fraction of seeds that must succeed (default 0.5)");
  noise_cmd->add_option("--parallel", parallel, "concurrent runs")->check(CLI::PositiveNumber);
  noise_cmd->add_option("--out", out_dir, "output directory (default $PARITYLAB_OUT_DIR)");
  noise_cmd->add_flag("--progress", progress, "print each finished run to stderr");

  // export
  auto* export_cmd = app.add_subcommand("export", "rebuild per-figure CSVs from a JSONL log");
  std::string export_log;
  export_cmd->add_option("--log", export_log, "JSONL log written by train/sweep/noise-search")->required();
  export_cmd->add_option("--out", out_dir, "output directory (default $PARITYLAB_OUT_DIR)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (parity_cmd->parsed()) {
      const auto bits = Bitstring::parse(literal);
      std::cout << "parity " << parity(bits) << "\n"
                << "hamming_weight " << hamming_weight(bits) << "\n"
                << "length " << bits.size() << "\n";
      return 0;
    }

    if (nim_eval->parsed()) {
      nim::Position pos{parse_unsigned_list(heaps_text)};
      if (capacity == 0) {
        for (unsigned h : pos.heaps) capacity = std::max(capacity, h);
        capacity = std::max(capacity, 1U);
      }
      std::cout << "grundy " << nim::grundy(pos) << "\n";
      if (use_oracle) std::cout << "grundy_oracle " << nim::grundy_oracle(pos) << "\n";
      std::cout << "winning " << (nim::is_winning(pos) ? "true" : "false") << "\n";
      std::cout << "winning_moves " << (pos.terminal() ? "[]" : format_moves(nim::winning_moves(pos))) << "\n";
      std::cout << "board " << nim::encode_board(pos, capacity).bits.literal() << "\n";
      return 0;
    }

    if (sample_cmd->parsed()) {
      const auto kind = parse_sampler_kind(kind_name);
      SamplerSpec spec;
      if (kind == SamplerKind::nim_trajectory) {
        nim::Position start{parse_unsigned_list(sample_heaps)};
        if (sample_capacity == 0) {
          for (unsigned h : start.heaps) sample_capacity = std::max(sample_capacity, h);
        }
        spec = SamplerSpec::nim_trajectory(start, std::max(sample_capacity, 1U), sample_scrambled);
      } else {
        spec = SamplerSpec::bits(kind, sample_n);
      }
      Rng rng = Rng::substream(sample_seed, Stream::train_data);
      for (const auto& ex : make_labeled_batch(spec, count, rng)) {
        std::cout << ex.bits.literal() << " " << ex.label << "\n";
      }
      return 0;
    }

    if (grad_cmd->parsed()) {
      const auto result = gradcheck_suite(instances, grad_seed, fd_step);
      std::cout << "instances " << result.instances << "\n"
                << "parameters_checked " << result.parameters_checked << "\n"
                << "max_relative_error " << result.max_relative_error << "\n";
      const bool ok = result.max_relative_error < tolerance;
      std::cout << (ok ? "PASS" : "FAIL") << "\n";
      return ok ? 0 : 1;
    }

    if (train_cmd->parsed()) {
      auto kv = train_flags.key_values();
      if (train_seed) kv.set("seed", std::to_string(*train_seed));
      const auto config = TrainConfig::from_key_values(kv);
      TrainOptions options;
      options.checkpoint_path = checkpoint_path;
      if (progress) {
        options.on_evaluation = [](const TraceEntry& e) {
          std::cerr << "step " << e.step << " accuracy " << e.accuracy << " rho " << e.rho << "\n";
        };
      }
      const auto record = train(config, options);
      std::cout << to_json(record).dump(2) << "\n";
      const fs::path log = log_path.empty() ? default_out_dir() / "runs.jsonl" : fs::path(log_path);
      append_jsonl(log.string(), summary_json(record));
      return record.outcome == Outcome::aborted ? 2 : 0;
    }

    auto report = [&](const RunRecord& r) {
      if (!progress) return;
      std::cerr << "n=" << r.length() << " rho0=" << r.config.schedule.rho0 << " seed=" << r.seed << " "
                << to_string(r.outcome);
      if (r.steps_to_success) std::cerr << " steps=" << *r.steps_to_success;
      std::cerr << " (" << r.wall_time_s << " s)\n";
    };

    if (sweep_cmd->parsed()) {
      SweepSpec spec;
      spec.lengths = to_sizes(parse_range_list(lengths_text));
      spec.seeds = parse_range_list(seeds_text);
      spec.base = sweep_flags.config();
      spec.parallelism = parallel;
      const fs::path out = out_dir.empty() ? default_out_dir() : fs::path(out_dir);
      fs::create_directories(out);
      const auto records = sweep_lengths(spec, report);
      for (const auto& r : records) {
        append_jsonl((out / "records.jsonl").string(), to_json(r));
        append_jsonl((out / "runs.jsonl").string(), summary_json(r));
      }
      const auto summaries = summarize(records);
      export_csv(summaries, out);
      print_aggregates(aggregate_by_length(summaries));
      return 0;
    }

    if (noise_cmd->parsed()) {
      const fs::path out = out_dir.empty() ? default_out_dir() : fs::path(out_dir);
      fs::create_directories(out);
      std::vector<std::pair<std::size_t, double>> rho_max;
      const auto base = noise_flags.config();
      for (auto n : parse_range_list(lengths_text)) {
        NoiseSearchSpec spec;
        spec.length = n;
        spec.seeds = parse_range_list(seeds_text);
        spec.granularity = granularity;
        spec.success_rule = success_rule;
        spec.base = base;
        spec.parallelism = parallel;
        const auto result = max_noise_search(spec, report, [&](const GridPoint& p) {
          append_jsonl((out / "runs.jsonl").string(), to_json(p, success_rule));
          if (progress) {
            std::cerr << "n=" << p.length << " rho0=" << format_double(p.rho0) << " " << p.successes << "/"
                      << p.runs << (p.passed ? " pass" : " fail") << "\n";
          }
        });
        for (const auto& r : result.records) append_jsonl((out / "records.jsonl").string(), to_json(r));
        rho_max.emplace_back(n, result.rho_max);
        std::cout << "length " << n << " rho_max " << format_double(result.rho_max) << "\n";
      }
      export_csv(std::span<const std::pair<std::size_t, double>>(rho_max), out);
      return 0;
    }

    if (export_cmd->parsed()) {
      const fs::path out = out_dir.empty() ? default_out_dir() : fs::path(out_dir);
      std::vector<RunSummary> runs;
      std::vector<GridPoint> grid;
      for (const auto& line : read_jsonl(export_log)) {
        const auto type = line.value("type", std::string("run"));
        if (type == "run") runs.push_back(RunSummary::from_json(line));
        if (type == "grid_point") grid.push_back(grid_point_from_json(line));
      }
      if (runs.empty() && grid.empty()) throw DomainError("log contains no runs or grid points");
      if (!runs.empty()) export_csv(runs, out);
      if (!grid.empty()) {
        const auto rho_max = rho_max_from_grid(grid);
        export_csv(std::span<const std::pair<std::size_t, double>>(rho_max), out);
      }
      std::cout << "wrote CSVs to " << out.string() << "\n";
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
