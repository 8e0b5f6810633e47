// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <filesystem>

#include "paritylab/records.hpp"
#include "paritylab/trainer.hpp"

using namespace paritylab;

namespace {

TrainConfig small_config(std::size_t n, std::uint64_t max_steps, std::uint64_t seed = 1) {
  TrainConfig c;
  c.sampler = SamplerSpec::bits(SamplerKind::latent_curriculum, n);
  c.max_steps = max_steps;
  c.eval_interval = 100;
  c.test_set_size = 500;
  c.master_seed = seed;
  return c;
}

} // namespace

TEST(Train, ZeroStepsIsFailureWithOneEvaluation) {
  const auto r = train(small_config(10, 0));
  EXPECT_EQ(r.outcome, Outcome::failure);
  EXPECT_FALSE(r.steps_to_success.has_value());
  ASSERT_EQ(r.trace.size(), 1U);
  EXPECT_EQ(r.trace[0].step, 0U);
  EXPECT_EQ(r.steps_executed, 0U);
}

TEST(Train, BookkeepingInvariants) {
  auto c = small_config(8, 450);
  c.schedule.rho0 = 0.2;
  const auto r = train(c);
  EXPECT_EQ(r.steps_executed, 450U);
  EXPECT_EQ(r.training_examples, 450U * 128U);
  // Evaluations at 0, every 100 steps, and the final step.
  ASSERT_EQ(r.trace.size(), 6U);
  EXPECT_EQ(r.trace.back().step, 450U);
  for (std::size_t i = 0; i < r.trace.size(); ++i) {
    EXPECT_GE(r.trace[i].accuracy, 0.0);
    EXPECT_LE(r.trace[i].accuracy, 1.0);
    EXPECT_GE(r.trace[i].rho, 0.0);
    EXPECT_LE(r.trace[i].rho, 0.2);
    if (i > 0) {
      EXPECT_GT(r.trace[i].step, r.trace[i - 1].step);
      EXPECT_DOUBLE_EQ(r.trace[i].rho, noise_rate(c.schedule, r.trace[i - 1].accuracy));
    }
  }
  EXPECT_DOUBLE_EQ(r.trace[0].rho, 0.2);
  EXPECT_GT(r.corrupted_labels, 0U);
  EXPECT_EQ(r.config_text, c.to_key_values().to_text());
}

TEST(Train, NoNoiseMeansNoCorruption) {
  const auto r = train(small_config(8, 200));
  EXPECT_EQ(r.corrupted_labels, 0U);
  for (const auto& e : r.trace) EXPECT_EQ(e.rho, 0.0);
}

TEST(Train, DeterministicApartFromWallTime) {
  auto c = small_config(10, 300, 5);
  c.schedule.rho0 = 0.1;
  const auto a = to_json(train(c), false).dump();
  const auto b = to_json(train(c), false).dump();
  EXPECT_EQ(a, b);
  auto other = c;
  other.master_seed = 6;
  EXPECT_NE(to_json(train(other), false).dump(), a);
}

TEST(Train, NoiseDoesNotChangeDataOrInit) {
  // Same seed with and without noise: the step-0 evaluation sees identical
  // weights and the identical test set.
  auto clean = small_config(10, 0, 9);
  auto noisy = clean;
  noisy.schedule.rho0 = 0.4;
  EXPECT_EQ(train(clean).trace[0].accuracy, train(noisy).trace[0].accuracy);
}

TEST(Train, LearnsShortParity) {
  auto c = small_config(10, 50'000, 1);
  c.lr = 0.5;
  c.eval_interval = 1000;
  c.test_set_size = 2000;
  const auto r = train(c);
  EXPECT_EQ(r.outcome, Outcome::success);
  ASSERT_TRUE(r.steps_to_success.has_value());
  EXPECT_EQ(*r.steps_to_success % 1000, 0U);
  EXPECT_EQ(r.steps_executed, *r.steps_to_success);
  EXPECT_GE(r.trace.back().accuracy, 0.95);
}

TEST(Train, DivergenceIsAborted) {
  auto c = small_config(10, 200);
  c.lr = 1e38;
  const auto r = train(c);
  EXPECT_EQ(r.outcome, Outcome::aborted);
  EXPECT_FALSE(r.steps_to_success.has_value());
  EXPECT_FALSE(r.diagnostic.empty());
}

TEST(Train, FixedDatasetAndMomentumRun) {
  auto c = small_config(6, 200);
  c.dataset_size = 300;
  c.momentum = 0.9;
  c.precision = Precision::float64;
  const auto r = train(c);
  EXPECT_EQ(r.steps_executed, 200U);
  EXPECT_NE(r.outcome, Outcome::aborted);
}

TEST(Train, NimTrajectoryRuns) {
  TrainConfig c;
  c.sampler = SamplerSpec::nim_trajectory({{2, 2}}, 2);
  c.max_steps = 50;
  c.eval_interval = 25;
  c.test_set_size = 100;
  const auto r = train(c);
  EXPECT_EQ(r.trace.size(), 3U);
  EXPECT_EQ(r.length(), 5U);
}

TEST(Train, WritesLoadableCheckpoint) {
  const auto path = std::filesystem::temp_directory_path() / "paritylab_trainer_test.ckpt";
  auto c = small_config(5, 20, 3);
  c.hidden_size = 4;
  const auto r = train(c, {path.string(), {}});
  EXPECT_EQ(r.checkpoint, path.string());
  const auto ck = load_checkpoint(path.string());
  EXPECT_EQ(ck.master_seed, 3U);
  EXPECT_EQ(ck.params.hidden_size(), 4U);
  EXPECT_TRUE(ck.params.all_finite());
  std::filesystem::remove(path);
}

TEST(Evaluate, RejectsCorruptedTestSet) {
  Rng rng(1);
  auto data = make_labeled_batch(SamplerSpec::bits(SamplerKind::uniform01, 5), 10, rng);
  data[3].label_is_corrupted = true;
  EXPECT_THROW(evaluate(LstmParams<double>(2), std::span<const LabeledExample>(data)), DomainError);
}

TEST(Records, JsonlRoundTrip) {
  const auto path = std::filesystem::temp_directory_path() / "paritylab_trainer_test.jsonl";
  std::filesystem::remove(path);
  const auto r = train(small_config(7, 100, 4));
  append_jsonl(path.string(), summary_json(r));
  append_jsonl(path.string(), summary_json(r));
  const auto lines = read_jsonl(path.string());
  ASSERT_EQ(lines.size(), 2U);
  const auto s = RunSummary::from_json(lines[1]);
  EXPECT_EQ(s.length, 7U);
  EXPECT_EQ(s.seed, 4U);
  EXPECT_EQ(s.outcome, r.outcome);
  std::filesystem::remove(path);
}
