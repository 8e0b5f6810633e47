// SPDX-License-Identifier: Apache-2.0
#pragma once

// Seeded samplers for the bitstring distributions under study and labeled
// batch assembly against the ground-truth oracles.

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "paritylab/bitstring.hpp"
#include "paritylab/error.hpp"
#include "paritylab/nim.hpp"
#include "paritylab/rng.hpp"

namespace paritylab {

enum class SamplerKind { uniform01, latent_curriculum, variable_length, nim_trajectory };

inline std::string_view to_string(SamplerKind kind) noexcept {
  switch (kind) {
  case SamplerKind::uniform01: return "uniform01";
  case SamplerKind::latent_curriculum: return "latent_curriculum";
  case SamplerKind::variable_length: return "variable_length";
  case SamplerKind::nim_trajectory: return "nim_trajectory";
  }
  return "?";
}

inline SamplerKind parse_sampler_kind(std::string_view name) {
  for (auto kind : {SamplerKind::uniform01, SamplerKind::latent_curriculum, SamplerKind::variable_length,
                    SamplerKind::nim_trajectory}) {
    if (to_string(kind) == name) return kind;
  }
  throw DomainError("unknown sampler kind: " + std::string(name));
}

struct NimSamplerParams {
  nim::Position start;
  unsigned capacity = 1;
  bool scrambled = false;
};

/// Which distribution to draw from. For variable_length, `n` is the maximum
/// length; for nim_trajectory it is the board length implied by the heaps.
struct SamplerSpec {
  SamplerKind kind = SamplerKind::latent_curriculum;
  std::size_t n = 20;
  std::optional<NimSamplerParams> nim;

  static SamplerSpec bits(SamplerKind kind, std::size_t n) {
    SamplerSpec spec{kind, n, std::nullopt};
    spec.validate();
    return spec;
  }

  static SamplerSpec nim_trajectory(nim::Position start, unsigned capacity, bool scrambled = false) {
    const std::size_t n = start.heaps.empty() ? 0 : nim::encoded_length(start.heaps.size(), capacity);
    SamplerSpec spec{SamplerKind::nim_trajectory, n, NimSamplerParams{std::move(start), capacity, scrambled}};
    spec.validate();
    return spec;
  }

  void validate() const {
    if (n < 1) throw DomainError("sampler length must be >= 1");
    if (nim.has_value() != (kind == SamplerKind::nim_trajectory)) {
      throw DomainError("nim parameters must be present iff kind is nim_trajectory");
    }
    if (nim) {
      if (nim->capacity == 0) throw DomainError("capacity must be positive");
      for (std::size_t i = 0; i < nim->start.heaps.size(); ++i) {
        if (nim->start.heaps[i] > nim->capacity) {
          throw CapacityExceededError(i, nim->start.heaps[i], nim->capacity);
        }
      }
      if (n != nim::encoded_length(nim->start.heaps.size(), nim->capacity)) {
        throw DomainError("n does not match the nim board length");
      }
    }
  }
};

struct LabeledExample {
  Bitstring bits;
  int label = 0;
  bool label_is_corrupted = false;
};

inline Bitstring sample_uniform01(std::size_t n, Rng& rng) {
  if (n < 1) throw DomainError("length must be >= 1");
  std::vector<Trit> values(n);
  for (auto& v : values) v = rng.coin() ? 1 : 0;
  return Bitstring(std::move(values));
}

/// Weight k uniform on 1..n, k distinct positions (partial Fisher-Yates),
/// each set to +1 or -1 with equal probability; the rest are 0.
inline Bitstring sample_latent_curriculum(std::size_t n, Rng& rng) {
  if (n < 1) throw DomainError("length must be >= 1");
  const auto k = static_cast<std::size_t>(rng.between(1, static_cast<std::int64_t>(n)));
  std::vector<std::size_t> index(n);
  for (std::size_t i = 0; i < n; ++i) index[i] = i;
  std::vector<Trit> values(n, 0);
  for (std::size_t i = 0; i < k; ++i) {
    const auto j = i + static_cast<std::size_t>(rng.below(n - i));
    std::swap(index[i], index[j]);
    values[index[i]] = rng.coin() ? 1 : -1;
  }
  return Bitstring(std::move(values));
}

/// Length uniform on 1..max_n, then uniform 0/1 fill.
inline Bitstring sample_variable_length(std::size_t max_n, Rng& rng) {
  if (max_n < 1) throw DomainError("max length must be >= 1");
  const auto n = static_cast<std::size_t>(rng.between(1, static_cast<std::int64_t>(max_n)));
  return sample_uniform01(n, rng);
}

/// Every board along one uniformly random playout (each legal move equally
/// likely) from `start` to the empty board, start included.
inline std::vector<nim::BoardEncoding> sample_nim_trajectory(const nim::Position& start, unsigned capacity,
                                                             Rng& rng, bool scrambled = false) {
  Rng* scramble = scrambled ? &rng : nullptr;
  std::vector<nim::BoardEncoding> boards;
  boards.push_back(nim::encode_board(start, capacity, scramble));
  nim::Position pos = start;
  while (!pos.terminal()) {
    auto pick = static_cast<unsigned>(rng.below(pos.total()));
    std::size_t heap = 0;
    while (pick >= pos.heaps[heap]) pick -= pos.heaps[heap++];
    pos = nim::apply(std::move(pos), nim::Move{heap, pick + 1});
    boards.push_back(nim::encode_board(pos, capacity, scramble));
  }
  return boards;
}

/// Ground-truth label: parity for plain bitstrings, the winning flag of the
/// decoded position for Nim boards.
inline int oracle_label(SamplerKind kind, const Bitstring& bits) {
  if (kind == SamplerKind::nim_trajectory) return nim::is_winning(nim::decode_board(bits)) ? 1 : 0;
  return parity(bits);
}

inline Bitstring sample_bits(const SamplerSpec& spec, Rng& rng) {
  switch (spec.kind) {
  case SamplerKind::uniform01: return sample_uniform01(spec.n, rng);
  case SamplerKind::latent_curriculum: return sample_latent_curriculum(spec.n, rng);
  case SamplerKind::variable_length: return sample_variable_length(spec.n, rng);
  case SamplerKind::nim_trajectory: break;
  }
  throw DomainError("nim_trajectory is sampled by whole playouts");
}

/// Clean labeled examples. Nim batches are filled by consecutive playouts,
/// the last one truncated to the batch size.
inline std::vector<LabeledExample> make_labeled_batch(const SamplerSpec& spec, std::size_t size, Rng& rng) {
  if (size < 1) throw DomainError("batch size must be >= 1");
  spec.validate();
  std::vector<LabeledExample> batch;
  batch.reserve(size);
  if (spec.kind == SamplerKind::nim_trajectory) {
    while (batch.size() < size) {
      for (auto& board : sample_nim_trajectory(spec.nim->start, spec.nim->capacity, rng, spec.nim->scrambled)) {
        if (batch.size() == size) break;
        const int label = oracle_label(spec.kind, board.bits);
        batch.push_back({std::move(board.bits), label, false});
      }
    }
    return batch;
  }
  for (std::size_t i = 0; i < size; ++i) {
    Bitstring bits = sample_bits(spec, rng);
    const int label = parity(bits);
    batch.push_back({std::move(bits), label, false});
  }
  return batch;
}

} // namespace paritylab
