// SPDX-License-Identifier: Apache-2.0
#pragma once

// Accuracy-coupled label noise. The corrupted fraction stays at rho0 while the
// model is no better than chance and falls linearly to zero at perfect
// accuracy; each training batch then has that fraction of labels flipped.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "paritylab/datagen.hpp"
#include "paritylab/error.hpp"
#include "paritylab/rng.hpp"

namespace paritylab {

struct NoiseSchedule {
  double rho0 = 0.0;

  void validate() const {
    if (!(rho0 >= 0.0 && rho0 <= 1.0)) throw DomainError("rho0 must lie in [0, 1]");
  }
};

inline double noise_rate(const NoiseSchedule& schedule, double accuracy) {
  schedule.validate();
  if (!(accuracy >= 0.0 && accuracy <= 1.0)) {
    throw DomainError("accuracy must lie in [0, 1], got " + std::to_string(accuracy));
  }
  if (accuracy <= 0.5) return schedule.rho0;
  return 2.0 * schedule.rho0 * (1.0 - accuracy);
}

enum class NoiseMode { exact, bernoulli };

inline std::string_view to_string(NoiseMode mode) noexcept {
  return mode == NoiseMode::exact ? "exact" : "bernoulli";
}

inline NoiseMode parse_noise_mode(std::string_view name) {
  if (name == "exact") return NoiseMode::exact;
  if (name == "bernoulli") return NoiseMode::bernoulli;
  throw DomainError("unknown noise mode: " + std::string(name));
}

/// round(rho * size), halves to even.
inline std::size_t corrupted_count(double rho, std::size_t size) {
  if (!(rho >= 0.0 && rho <= 1.0)) throw DomainError("rho must lie in [0, 1]");
  return static_cast<std::size_t>(std::nearbyint(rho * static_cast<double>(size)));
}

/// Indices of the examples to flip, in ascending order.
inline std::vector<std::size_t> choose_corrupted(std::size_t size, double rho, Rng& rng,
                                                 NoiseMode mode = NoiseMode::exact) {
  std::vector<std::size_t> chosen;
  if (mode == NoiseMode::bernoulli) {
    if (!(rho >= 0.0 && rho <= 1.0)) throw DomainError("rho must lie in [0, 1]");
    for (std::size_t i = 0; i < size; ++i) {
      if (rng.bernoulli(rho)) chosen.push_back(i);
    }
    return chosen;
  }
  const std::size_t count = corrupted_count(rho, size);
  std::vector<std::size_t> index(size);
  std::iota(index.begin(), index.end(), std::size_t{0});
  for (std::size_t i = 0; i < count; ++i) {
    std::swap(index[i], index[i + static_cast<std::size_t>(rng.below(size - i))]);
  }
  chosen.assign(index.begin(), index.begin() + static_cast<std::ptrdiff_t>(count));
  std::sort(chosen.begin(), chosen.end());
  return chosen;
}

/// Flips the labels of round(rho * |batch|) examples chosen uniformly without
/// replacement (or of each example independently in Bernoulli mode). Bits and
/// order are untouched. Returns the number flipped.
inline std::size_t corrupt_labels_in_place(std::span<LabeledExample> batch, double rho, Rng& rng,
                                           NoiseMode mode = NoiseMode::exact) {
  const auto chosen = choose_corrupted(batch.size(), rho, rng, mode);
  for (std::size_t i : chosen) {
    batch[i].label = 1 - batch[i].label;
    batch[i].label_is_corrupted = !batch[i].label_is_corrupted;
  }
  return chosen.size();
}

inline std::vector<LabeledExample> corrupt_labels(std::vector<LabeledExample> batch, double rho, Rng& rng,
                                                  NoiseMode mode = NoiseMode::exact) {
  corrupt_labels_in_place(batch, rho, rng, mode);
  return batch;
}

} // namespace paritylab
