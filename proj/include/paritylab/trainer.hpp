// SPDX-License-Identifier: Apache-2.0
#pragma once

// The training protocol: fresh batches every step, labels corrupted at the
// rate set by the latest test accuracy, plain minibatch SGD on mean BCE, and
// periodic evaluation on a fixed clean held-out set. A run succeeds the first
// time test accuracy reaches the threshold and fails when the step budget is
// spent.

#include <chrono>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "paritylab/checkpoint.hpp"
#include "paritylab/config.hpp"
#include "paritylab/datagen.hpp"
#include "paritylab/error.hpp"
#include "paritylab/lstm.hpp"
#include "paritylab/noise.hpp"
#include "paritylab/rng.hpp"

namespace paritylab {

/// Which accuracy drives the noise schedule.
enum class NoiseFeedback { latest, best };

inline std::string_view to_string(NoiseFeedback f) noexcept { return f == NoiseFeedback::latest ? "latest" : "best"; }

inline NoiseFeedback parse_noise_feedback(std::string_view name) {
  if (name == "latest") return NoiseFeedback::latest;
  if (name == "best") return NoiseFeedback::best;
  throw DomainError("unknown noise feedback: " + std::string(name));
}

enum class Precision { float32, float64 };

inline std::string_view to_string(Precision p) noexcept { return p == Precision::float32 ? "float32" : "float64"; }

inline Precision parse_precision(std::string_view name) {
  if (name == "float32") return Precision::float32;
  if (name == "float64") return Precision::float64;
  throw DomainError("unknown precision: " + std::string(name));
}

struct TrainConfig {
  SamplerSpec sampler = SamplerSpec::bits(SamplerKind::latent_curriculum, 20);
  NoiseSchedule schedule{};
  NoiseMode noise_mode = NoiseMode::exact;
  NoiseFeedback noise_feedback = NoiseFeedback::latest;
  std::size_t batch_size = 128;
  std::uint64_t max_steps = 7'500'000;
  double success_threshold = 0.95;
  std::uint64_t eval_interval = 1'000;
  std::size_t test_set_size = 10'000;
  std::size_t dataset_size = 0; ///< 0: sample a fresh batch every step
  double lr = 0.5;
  double momentum = 0.0;
  std::size_t hidden_size = 16;
  InputEncoding encoding = InputEncoding::scalar;
  Precision precision = Precision::float32;
  std::uint64_t master_seed = 0;

  void validate() const {
    sampler.validate();
    schedule.validate();
    if (batch_size < 1) throw DomainError("batch_size must be >= 1");
    if (!(success_threshold > 0.5 && success_threshold <= 1.0)) {
      throw DomainError("success_threshold must lie in (0.5, 1]");
    }
    if (eval_interval < 1) throw DomainError("eval_interval must be >= 1");
    if (test_set_size < 1) throw DomainError("test_set_size must be >= 1");
    if (!(lr > 0.0)) throw DomainError("lr must be positive");
    if (!(momentum >= 0.0 && momentum < 1.0)) throw DomainError("momentum must lie in [0, 1)");
    if (hidden_size < 1) throw DomainError("hidden_size must be >= 1");
  }

  /// Effective configuration as ordered key=value pairs.
  KeyValues to_key_values() const {
    KeyValues kv;
    kv.set("kind", std::string(to_string(sampler.kind)));
    kv.set("n", std::to_string(sampler.n));
    if (sampler.nim) {
      kv.set("heaps", join_unsigned(sampler.nim->start.heaps));
      kv.set("capacity", std::to_string(sampler.nim->capacity));
      kv.set("scrambled", sampler.nim->scrambled ? "true" : "false");
    }
    kv.set("rho0", format_double(schedule.rho0));
    kv.set("noise_mode", std::string(to_string(noise_mode)));
    kv.set("noise_feedback", std::string(to_string(noise_feedback)));
    kv.set("batch_size", std::to_string(batch_size));
    kv.set("max_steps", std::to_string(max_steps));
    kv.set("success_threshold", format_double(success_threshold));
    kv.set("eval_interval", std::to_string(eval_interval));
    kv.set("test_set_size", std::to_string(test_set_size));
    kv.set("dataset_size", std::to_string(dataset_size));
    kv.set("lr", format_double(lr));
    kv.set("momentum", format_double(momentum));
    kv.set("hidden", std::to_string(hidden_size));
    kv.set("encoding", std::string(to_string(encoding)));
    kv.set("precision", std::string(to_string(precision)));
    kv.set("seed", std::to_string(master_seed));
    return kv;
  }

  /// Overrides fields named in `kv`; unknown keys are rejected.
  static TrainConfig from_key_values(const KeyValues& kv, TrainConfig base) {
    static const std::vector<std::string_view> known = {
        "kind", "n", "heaps", "capacity", "scrambled", "rho0", "noise_mode", "noise_feedback", "batch_size",
        "max_steps", "success_threshold", "eval_interval", "test_set_size", "dataset_size", "lr", "momentum",
        "hidden", "encoding", "precision", "seed"};
    kv.require_known(known);

    SamplerKind kind = kv.has("kind") ? parse_sampler_kind(kv.get("kind")) : base.sampler.kind;
    if (kind == SamplerKind::nim_trajectory) {
      nim::Position start = base.sampler.nim ? base.sampler.nim->start : nim::Position{};
      unsigned capacity = base.sampler.nim ? base.sampler.nim->capacity : 0;
      bool scrambled = base.sampler.nim ? base.sampler.nim->scrambled : false;
      if (kv.has("heaps")) start.heaps = parse_unsigned_list(kv.get("heaps"));
      if (kv.has("capacity")) capacity = static_cast<unsigned>(parse_uint(kv.get("capacity")));
      if (kv.has("scrambled")) scrambled = parse_bool(kv.get("scrambled"));
      if (capacity == 0) {
        for (unsigned h : start.heaps) capacity = std::max(capacity, h);
      }
      base.sampler = SamplerSpec::nim_trajectory(std::move(start), std::max(capacity, 1U), scrambled);
    } else {
      const std::size_t n = kv.has("n") ? parse_uint(kv.get("n")) : base.sampler.n;
      base.sampler = SamplerSpec::bits(kind, n);
    }
    if (kv.has("rho0")) base.schedule.rho0 = parse_double(kv.get("rho0"));
    if (kv.has("noise_mode")) base.noise_mode = parse_noise_mode(kv.get("noise_mode"));
    if (kv.has("noise_feedback")) base.noise_feedback = parse_noise_feedback(kv.get("noise_feedback"));
    if (kv.has("batch_size")) base.batch_size = parse_uint(kv.get("batch_size"));
    if (kv.has("max_steps")) base.max_steps = parse_uint(kv.get("max_steps"));
    if (kv.has("success_threshold")) base.success_threshold = parse_double(kv.get("success_threshold"));
    if (kv.has("eval_interval")) base.eval_interval = parse_uint(kv.get("eval_interval"));
    if (kv.has("test_set_size")) base.test_set_size = parse_uint(kv.get("test_set_size"));
    if (kv.has("dataset_size")) base.dataset_size = parse_uint(kv.get("dataset_size"));
    if (kv.has("lr")) base.lr = parse_double(kv.get("lr"));
    if (kv.has("momentum")) base.momentum = parse_double(kv.get("momentum"));
    if (kv.has("hidden")) base.hidden_size = parse_uint(kv.get("hidden"));
    if (kv.has("encoding")) base.encoding = parse_input_encoding(kv.get("encoding"));
    if (kv.has("precision")) base.precision = parse_precision(kv.get("precision"));
    if (kv.has("seed")) base.master_seed = parse_uint(kv.get("seed"));
    base.validate();
    return base;
  }

  static TrainConfig from_key_values(const KeyValues& kv);
};

inline TrainConfig TrainConfig::from_key_values(const KeyValues& kv) { return from_key_values(kv, TrainConfig{}); }

enum class Outcome { success, failure, aborted };

inline std::string_view to_string(Outcome o) noexcept {
  switch (o) {
  case Outcome::success: return "success";
  case Outcome::failure: return "failure";
  case Outcome::aborted: return "aborted";
  }
  return "?";
}

inline Outcome parse_outcome(std::string_view name) {
  for (auto o : {Outcome::success, Outcome::failure, Outcome::aborted}) {
    if (to_string(o) == name) return o;
  }
  throw DomainError("unknown outcome: " + std::string(name));
}

struct TraceEntry {
  std::uint64_t step = 0;
  double accuracy = 0;
  double rho = 0; ///< noise rate applied to the batches that led up to this evaluation

  friend bool operator==(const TraceEntry&, const TraceEntry&) = default;
};

struct RunRecord {
  TrainConfig config;
  std::string config_text; ///< effective key=value configuration, verbatim
  std::uint64_t seed = 0;
  Outcome outcome = Outcome::failure;
  std::optional<std::uint64_t> steps_to_success;
  std::vector<TraceEntry> trace;
  std::uint64_t steps_executed = 0;
  std::uint64_t training_examples = 0;
  std::uint64_t corrupted_labels = 0;
  double wall_time_s = 0;
  std::string checkpoint;
  std::string diagnostic;

  std::size_t length() const noexcept { return config.sampler.n; }
};

struct TrainOptions {
  std::string checkpoint_path; ///< written with the final parameters when nonempty
  std::function<void(const TraceEntry&)> on_evaluation;
};

/// Test-set accuracy. Refuses a test set that carries corrupted labels.
template <std::floating_point T>
double evaluate(const LstmParams<T>& params, std::span<const LabeledExample> test_set) {
  for (const auto& ex : test_set) {
    if (ex.label_is_corrupted) throw DomainError("test set contains corrupted labels");
  }
  return accuracy(params, test_set);
}

namespace detail {

/// Source of training batches: online sampling, or epochs over a fixed
/// dataset reshuffled each pass.
class BatchSource {
public:
  BatchSource(const TrainConfig& config, Rng rng) : config_(config), rng_(rng) {
    if (config.dataset_size > 0) {
      dataset_ = make_labeled_batch(config.sampler, config.dataset_size, rng_);
      order_.resize(dataset_.size());
      for (std::size_t i = 0; i < order_.size(); ++i) order_[i] = i;
      cursor_ = order_.size();
    }
  }

  std::vector<LabeledExample> next() {
    if (dataset_.empty()) return make_labeled_batch(config_.sampler, config_.batch_size, rng_);
    std::vector<LabeledExample> batch;
    batch.reserve(config_.batch_size);
    while (batch.size() < config_.batch_size) {
      if (cursor_ == order_.size()) {
        for (std::size_t k = order_.size(); k > 1; --k) std::swap(order_[k - 1], order_[rng_.below(k)]);
        cursor_ = 0;
      }
      batch.push_back(dataset_[order_[cursor_++]]);
    }
    return batch;
  }

private:
  const TrainConfig& config_;
  Rng rng_;
  std::vector<LabeledExample> dataset_;
  std::vector<std::size_t> order_;
  std::size_t cursor_ = 0;
};

template <std::floating_point T>
RunRecord train_impl(const TrainConfig& config, const TrainOptions& options) {
  const auto started = std::chrono::steady_clock::now();
  RunRecord record;
  record.config = config;
  record.config_text = config.to_key_values().to_text();
  record.seed = config.master_seed;

  Rng init_rng = Rng::substream(config.master_seed, Stream::weight_init);
  Rng test_rng = Rng::substream(config.master_seed, Stream::test_data);
  Rng noise_rng = Rng::substream(config.master_seed, Stream::label_noise);
  BatchSource source(config, Rng::substream(config.master_seed, Stream::train_data));

  LstmParams<T> params = init_params<T>(config.hidden_size, init_rng, config.encoding);
  LstmParams<T> velocity(config.hidden_size, config.encoding);
  detail::Engine<T> engine(params);
  const std::vector<LabeledExample> test_set = make_labeled_batch(config.sampler, config.test_set_size, test_rng);

  double feedback_accuracy = 0.5;
  double rho = noise_rate(config.schedule, feedback_accuracy);

  auto record_evaluation = [&](std::uint64_t step) {
    const double acc = evaluate(params, test_set);
    const TraceEntry entry{step, acc, rho};
    record.trace.push_back(entry);
    if (options.on_evaluation) options.on_evaluation(entry);
    feedback_accuracy = config.noise_feedback == NoiseFeedback::latest ? acc : std::max(feedback_accuracy, acc);
    rho = noise_rate(config.schedule, feedback_accuracy);
    if (acc >= config.success_threshold) {
      record.outcome = Outcome::success;
      record.steps_to_success = step;
      return true;
    }
    return false;
  };

  try {
    bool done = record_evaluation(0);
    for (std::uint64_t step = 1; !done && step <= config.max_steps; ++step) {
      auto batch = source.next();
      record.corrupted_labels += corrupt_labels_in_place(batch, rho, noise_rng, config.noise_mode);
      engine.rebind(params);
      accumulate_gradient(engine, std::span<const LabeledExample>(batch));
      const LstmParams<T>& grads = engine.gradient();
      if (config.momentum > 0.0) {
        auto v = velocity.flat();
        auto g = grads.flat();
        const T mu = static_cast<T>(config.momentum);
        for (std::size_t k = 0; k < v.size(); ++k) v[k] = mu * v[k] + g[k];
        sgd_update(params, velocity, static_cast<T>(config.lr));
      } else {
        sgd_update(params, grads, static_cast<T>(config.lr));
      }
      record.steps_executed = step;
      record.training_examples += batch.size();
      if (!params.all_finite()) throw NumericOverflowError("non-finite parameter after step " + std::to_string(step));
      if (step % config.eval_interval == 0 || step == config.max_steps) done = record_evaluation(step);
    }
    if (record.outcome != Outcome::success) record.outcome = Outcome::failure;
  } catch (const NumericOverflowError& e) {
    record.outcome = Outcome::aborted;
    record.steps_to_success.reset();
    record.diagnostic = e.what();
  }

  if (!options.checkpoint_path.empty()) {
    save_checkpoint(options.checkpoint_path, params.template cast<double>(), config.master_seed);
    record.checkpoint = options.checkpoint_path;
  }
  record.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return record;
}

} // namespace detail

/// One full training run, entirely determined by `config` (wall time aside).
inline RunRecord train(const TrainConfig& config, const TrainOptions& options = {}) {
  config.validate();
  if (config.precision == Precision::float64) return detail::train_impl<double>(config, options);
  return detail::train_impl<float>(config, options);
}

} // namespace paritylab

