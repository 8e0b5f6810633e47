// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"
#include "paritylab/checkpoint.hpp"
#include "paritylab/gradcheck.hpp"
#include "paritylab/lstm.hpp"

using namespace paritylab;

namespace {

LstmParams<double> random_params(std::size_t hidden, std::uint64_t seed, double scale = 0.5,
                                 InputEncoding enc = InputEncoding::scalar) {
  Rng rng(seed);
  LstmParams<double> p(hidden, enc);
  for (auto& w : p.flat()) w = rng.uniform(-scale, scale);
  return p;
}

std::vector<LabeledExample> batch_of(std::size_t n, std::size_t size, std::uint64_t seed) {
  Rng rng(seed);
  return make_labeled_batch(SamplerSpec::bits(SamplerKind::latent_curriculum, n), size, rng);
}

double sig(double x) { return 1.0 / (1.0 + std::exp(-x)); }

} // namespace

TEST(LstmParams, ParameterCount) {
  EXPECT_EQ(LstmParams<double>(16).size(), 1169U);
  EXPECT_EQ(LstmParams<double>(16, InputEncoding::one_hot).size(), 1297U);
  EXPECT_THROW(LstmParams<double>(0), DomainError);
}

TEST(LstmParams, InitRanges) {
  Rng rng(1);
  const auto p = init_params<double>(16, rng);
  for (Gate g : all_gates) {
    for (double w : p.input_weights(g)) EXPECT_LE(std::abs(w), 0.1);
    for (double w : p.recurrent_weights(g)) EXPECT_LE(std::abs(w), 0.1);
    for (double b : p.bias(g)) EXPECT_EQ(b, g == Gate::forget ? 1.0 : 0.0);
  }
  EXPECT_EQ(p.head_bias(), 0.0);
  Rng again(1);
  EXPECT_EQ(p, init_params<double>(16, again));
}

TEST(Forward, ZeroParamsGiveHalf) {
  const LstmParams<double> p(16);
  EXPECT_DOUBLE_EQ(forward(p, Bitstring::parse("1011")).probability, 0.5);
}

TEST(Forward, HandComputedTwoSteps) {
  // Hidden 1, every weight and bias 0.5, input "1 m".
  LstmParams<double> p(1);
  for (auto& w : p.flat()) w = 0.5;
  double h = 0, c = 0;
  for (double x : {1.0, -1.0}) {
    const double z = 0.5 * x + 0.5 * h + 0.5;
    const double gate = sig(z);
    c = gate * c + gate * std::tanh(z);
    h = gate * std::tanh(c);
  }
  const double expected = sig(0.5 * h + 0.5);
  const auto trace = forward(p, Bitstring::parse("1m"));
  EXPECT_NEAR(trace.probability, expected, 1e-14);
  EXPECT_NEAR(trace.hidden_state[1], h, 1e-14);
  EXPECT_NEAR(trace.cell[1], c, 1e-14);
}

TEST(Forward, MatchesReferenceImplementation) {
  for (auto enc : {InputEncoding::scalar, InputEncoding::one_hot}) {
    const auto p = random_params(5, 2, 0.7, enc);
    const oracle::ReferenceLstm ref{p};
    Rng rng(3);
    for (int i = 0; i < 50; ++i) {
      const auto bits = sample_latent_curriculum(1 + rng.below(15), rng);
      EXPECT_NEAR(forward(p, bits).probability, ref.probability(bits), 1e-13);
    }
  }
}

TEST(Forward, BatchedProbabilitiesMatchSingle) {
  const auto p = random_params(4, 4);
  Rng rng(5);
  auto spec = SamplerSpec::bits(SamplerKind::variable_length, 12);
  const auto data = make_labeled_batch(spec, 700, rng);
  const auto batched = probabilities(p, std::span<const LabeledExample>(data));
  for (std::size_t i = 0; i < data.size(); ++i) EXPECT_NEAR(batched[i], forward(p, data[i].bits).probability, 1e-14);
}

TEST(BceLoss, ClampedAndFinite) {
  EXPECT_NEAR(bce_loss(0.5, 1), std::log(2.0), 1e-15);
  EXPECT_NEAR(bce_loss(0.0, 1), -std::log(1e-7), 1e-9);
  EXPECT_NEAR(bce_loss(1.0, 0), -std::log(1e-7), 1e-6);
  EXPECT_TRUE(std::isfinite(bce_loss(1.0, 1)));
}

TEST(Backward, MatchesReferenceFiniteDifferences) {
  for (std::size_t hidden : {1U, 3U}) {
    for (auto enc : {InputEncoding::scalar, InputEncoding::one_hot}) {
      const auto p = random_params(hidden, 10 + hidden, 0.5, enc);
      const auto batch = batch_of(6, 5, 20 + hidden);
      const auto analytic = backward<double>(p, batch);
      const auto numeric = oracle::finite_difference_gradient(p, batch, 1e-4);
      for (std::size_t k = 0; k < p.size(); ++k) {
        EXPECT_LT(relative_error(analytic.flat()[k], numeric[k]), 1e-6) << "parameter " << k;
      }
    }
  }
}

TEST(Backward, RaggedBatchMatchesReference) {
  const auto p = random_params(3, 30);
  Rng rng(31);
  const auto batch = make_labeled_batch(SamplerSpec::bits(SamplerKind::variable_length, 7), 9, rng);
  const auto analytic = backward<double>(p, batch);
  const auto numeric = oracle::finite_difference_gradient(p, batch, 1e-4);
  for (std::size_t k = 0; k < p.size(); ++k) EXPECT_LT(relative_error(analytic.flat()[k], numeric[k]), 1e-6);
}

TEST(Backward, BatchGradientIsMeanOfSingles) {
  const auto p = random_params(4, 40);
  const auto batch = batch_of(8, 6, 41);
  const auto whole = backward<double>(p, batch);
  std::vector<double> mean(p.size(), 0.0);
  for (const auto& ex : batch) {
    const auto g = backward<double>(p, std::span<const LabeledExample>(&ex, 1));
    for (std::size_t k = 0; k < p.size(); ++k) mean[k] += g.flat()[k] / static_cast<double>(batch.size());
  }
  for (std::size_t k = 0; k < p.size(); ++k) EXPECT_NEAR(whole.flat()[k], mean[k], 1e-14);
}

TEST(Backward, PermutationInvariant) {
  const auto p = random_params(4, 50);
  auto batch = batch_of(8, 16, 51);
  const auto before = backward<double>(p, batch);
  std::reverse(batch.begin(), batch.end());
  const auto after = backward<double>(p, batch);
  for (std::size_t k = 0; k < p.size(); ++k) EXPECT_NEAR(before.flat()[k], after.flat()[k], 1e-14);
  EXPECT_THROW(backward<double>(p, std::span<const LabeledExample>()), DomainError);
}

TEST(Backward, ReportsMeanLoss) {
  const auto p = random_params(3, 60);
  const auto batch = batch_of(5, 10, 61);
  double loss = 0;
  backward<double>(p, batch, &loss);
  EXPECT_NEAR(loss, oracle::ReferenceLstm{p}.mean_loss(batch), 1e-13);
}

TEST(Sgd, ZeroLearningRateIsNoOp) {
  const auto p = random_params(3, 70);
  const auto g = backward<double>(p, batch_of(5, 4, 71));
  EXPECT_EQ(sgd_step(p, g, 0.0), p);
  EXPECT_THROW(sgd_step(p, g, -1.0), DomainError);
  EXPECT_THROW(sgd_step(p, LstmParams<double>(4), 0.1), DomainError);
}

TEST(Sgd, ElementwiseUpdate) {
  LstmParams<double> p(1);
  LstmParams<double> g(1);
  p.flat()[0] = 1.0;
  g.flat()[0] = 2.0;
  EXPECT_DOUBLE_EQ(sgd_step(p, g, 0.1).flat()[0], 0.8);
}

TEST(Sgd, SmallStepDescends) {
  const auto p = random_params(4, 80);
  const auto batch = batch_of(6, 32, 81);
  const auto g = backward<double>(p, batch);
  EXPECT_LT(mean_loss(sgd_step(p, g, 1e-3), std::span<const LabeledExample>(batch)),
            mean_loss(p, std::span<const LabeledExample>(batch)));
}

TEST(Accuracy, ThresholdAndEmpty) {
  EXPECT_EQ(predict_label(0.5), 1);
  EXPECT_EQ(predict_label(0.4999), 0);
  const LstmParams<double> zero(2);
  // p = 0.5 everywhere, so every example is predicted 1.
  const auto batch = batch_of(6, 200, 90);
  double ones = 0;
  for (const auto& ex : batch) ones += ex.label;
  EXPECT_DOUBLE_EQ(accuracy(zero, std::span<const LabeledExample>(batch)), ones / 200.0);
  EXPECT_THROW(accuracy(zero, std::span<const LabeledExample>()), DomainError);
}

TEST(Training, MemorizesTinyBatch) {
  Rng rng(100);
  auto p = init_params<double>(8, rng);
  const auto batch = batch_of(4, 8, 101);
  for (int step = 0; step < 20'000; ++step) sgd_update(p, backward<double>(p, batch), 0.5);
  EXPECT_LT(mean_loss(p, std::span<const LabeledExample>(batch)), 0.01);
}

TEST(Precision, FloatTracksDouble) {
  const auto pd = random_params(16, 110, 0.3);
  const auto pf = pd.cast<float>();
  const auto batch = batch_of(20, 64, 111);
  const auto gd = backward<double>(pd, batch);
  const auto gf = backward<float>(pf, batch);
  for (std::size_t k = 0; k < pd.size(); ++k) EXPECT_NEAR(gf.flat()[k], gd.flat()[k], 1e-4);
  const auto prd = probabilities(pd, std::span<const LabeledExample>(batch));
  const auto prf = probabilities(pf, std::span<const LabeledExample>(batch));
  for (std::size_t i = 0; i < batch.size(); ++i) EXPECT_NEAR(prf[i], prd[i], 1e-5);
}

TEST(FastExp, CloseToStdExp) {
  for (float x = -87.0f; x <= 88.0f; x += 0.01f) {
    const float ref = std::exp(x);
    EXPECT_LE(std::abs(detail::fast_exp(x) - ref), 4e-7f * ref) << x;
  }
  EXPECT_EQ(detail::fast_exp(-200.0f), detail::fast_exp(-87.0f));
}

TEST(Checkpoint, RoundTripIsExact) {
  const auto p = random_params(5, 120, 0.9, InputEncoding::one_hot);
  const auto text = format_checkpoint(p, 42);
  const auto back = parse_checkpoint(text);
  EXPECT_EQ(back.params, p);
  EXPECT_EQ(back.master_seed, 42U);
  EXPECT_EQ(format_checkpoint(back.params, 42), text);
}

TEST(Checkpoint, RejectsCorruptText) {
  const auto text = format_checkpoint(random_params(2, 130), 1);
  EXPECT_THROW(parse_checkpoint("not a checkpoint"), IoError);
  EXPECT_THROW(parse_checkpoint(text.substr(0, text.rfind('\n', text.size() - 2) + 1)), IoError);
  EXPECT_THROW(load_checkpoint("/nonexistent/dir/ckpt.txt"), IoError);
}

TEST(Gradcheck, SuiteWithinTolerance) {
  const auto r = gradcheck_suite(4, 7);
  EXPECT_EQ(r.instances, 4U);
  EXPECT_LT(r.max_relative_error, 1e-4);
}
