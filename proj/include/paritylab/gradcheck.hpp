// SPDX-License-Identifier: Apache-2.0
#pragma once

// Central finite-difference check of the BPTT gradient.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "paritylab/datagen.hpp"
#include "paritylab/lstm.hpp"
#include "paritylab/rng.hpp"

namespace paritylab {

/// |a - b| / max(|a|, |b|, floor). The floor keeps parameters whose true
/// gradient is ~0 from reporting round-off as relative error.
inline double relative_error(double a, double b, double floor = 1e-6) noexcept {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

struct GradcheckResult {
  double max_relative_error = 0;
  std::size_t parameters_checked = 0;
  std::size_t instances = 0;
};

/// Numerical gradient of the mean batch loss, one parameter at a time.
inline LstmParams<double> numerical_gradient(const LstmParams<double>& params, std::span<const LabeledExample> batch,
                                             double step = 1e-5) {
  LstmParams<double> probe = params;
  LstmParams<double> grads(params.hidden_size(), params.encoding());
  auto p = probe.flat();
  auto g = grads.flat();
  for (std::size_t k = 0; k < p.size(); ++k) {
    const double saved = p[k];
    p[k] = saved + step;
    const double up = mean_loss(probe, batch);
    p[k] = saved - step;
    const double down = mean_loss(probe, batch);
    p[k] = saved;
    g[k] = (up - down) / (2 * step);
  }
  return grads;
}

inline GradcheckResult gradient_check(const LstmParams<double>& params, std::span<const LabeledExample> batch,
                                      double step = 1e-5) {
  const auto analytic = backward<double>(params, batch);
  const auto numeric = numerical_gradient(params, batch, step);
  GradcheckResult result{0, params.size(), 1};
  for (std::size_t k = 0; k < params.size(); ++k) {
    result.max_relative_error =
        std::max(result.max_relative_error, relative_error(analytic.flat()[k], numeric.flat()[k]));
  }
  return result;
}

struct GradcheckInstance {
  LstmParams<double> params;
  std::vector<LabeledExample> batch;
};

/// Random instance: weights uniform on [-scale, scale] (biases included) and
/// a small latent-curriculum batch with parity labels.
inline GradcheckInstance random_gradcheck_instance(std::size_t hidden, std::size_t length, Rng& rng,
                                                   std::size_t batch_size = 4, double scale = 0.5,
                                                   InputEncoding encoding = InputEncoding::scalar) {
  GradcheckInstance inst{LstmParams<double>(hidden, encoding), {}};
  for (auto& w : inst.params.flat()) w = rng.uniform(-scale, scale);
  inst.batch = make_labeled_batch(SamplerSpec::bits(SamplerKind::latent_curriculum, length), batch_size, rng);
  return inst;
}

/// `instances` random problems cycling over hidden sizes {2, 4} and lengths
/// {3, 8}; reports the worst relative error seen.
inline GradcheckResult gradcheck_suite(std::size_t instances = 20, std::uint64_t seed = 1, double step = 1e-5) {
  constexpr std::size_t hidden_sizes[] = {2, 4};
  constexpr std::size_t lengths[] = {3, 8};
  Rng rng = Rng::substream(seed, Stream::gradcheck);
  GradcheckResult total;
  for (std::size_t i = 0; i < instances; ++i) {
    const auto inst = random_gradcheck_instance(hidden_sizes[i % 2], lengths[(i / 2) % 2], rng);
    const auto r = gradient_check(inst.params, inst.batch, step);
    total.max_relative_error = std::max(total.max_relative_error, r.max_relative_error);
    total.parameters_checked += r.parameters_checked;
    ++total.instances;
  }
  return total;
}

} // namespace paritylab
