// SPDX-License-Identifier: Apache-2.0
#pragma once

// Normal-play Nim: positions, the trit board encoding, nimbers by XOR and by
// the brute-force mex recursion, and winning-move enumeration.
//
// Board encoding: a heap with c of `capacity` counters is c ones followed by
// (capacity - c) zeros; heap blocks are joined by single -1 separators.

#include <algorithm>
#include <cstddef>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "paritylab/bitstring.hpp"
#include "paritylab/error.hpp"
#include "paritylab/rng.hpp"

namespace paritylab::nim {

struct Position {
  std::vector<unsigned> heaps;

  unsigned total() const noexcept { return std::accumulate(heaps.begin(), heaps.end(), 0U); }
  bool terminal() const noexcept { return total() == 0; }

  friend bool operator==(const Position&, const Position&) = default;
};

struct Move {
  std::size_t heap = 0;
  unsigned take = 0;

  friend bool operator==(const Move&, const Move&) = default;
};

struct BoardEncoding {
  unsigned capacity;
  Bitstring bits;
};

inline Position apply(Position pos, Move move) {
  if (move.heap >= pos.heaps.size() || move.take == 0 || move.take > pos.heaps[move.heap]) {
    throw DomainError("illegal move");
  }
  pos.heaps[move.heap] -= move.take;
  return pos;
}

inline std::size_t encoded_length(std::size_t heap_count, unsigned capacity) noexcept {
  return heap_count * capacity + (heap_count - 1);
}

/// Renders `pos` as a board. With `scramble`, the counters inside each heap
/// block are placed at random slots instead of the canonical 1s-then-0s form.
inline BoardEncoding encode_board(const Position& pos, unsigned capacity, Rng* scramble = nullptr) {
  if (capacity == 0) throw DomainError("capacity must be positive");
  if (pos.heaps.empty()) throw DomainError("position must have at least one heap");
  for (std::size_t i = 0; i < pos.heaps.size(); ++i) {
    if (pos.heaps[i] > capacity) throw CapacityExceededError(i, pos.heaps[i], capacity);
  }
  std::vector<Trit> bits;
  bits.reserve(encoded_length(pos.heaps.size(), capacity));
  for (std::size_t i = 0; i < pos.heaps.size(); ++i) {
    if (i > 0) bits.push_back(-1);
    const auto block_start = bits.size();
    bits.insert(bits.end(), pos.heaps[i], Trit{1});
    bits.insert(bits.end(), capacity - pos.heaps[i], Trit{0});
    if (scramble != nullptr) {
      for (std::size_t k = capacity; k > 1; --k) {
        const auto j = static_cast<std::size_t>(scramble->below(k));
        std::swap(bits[block_start + k - 1], bits[block_start + j]);
      }
    }
  }
  return BoardEncoding{capacity, Bitstring(std::move(bits))};
}

/// Counts the 1s of each separator-delimited block.
inline Position decode_board(const Bitstring& bits) {
  Position pos;
  pos.heaps.push_back(0);
  for (Trit t : bits) {
    if (t == -1) {
      pos.heaps.push_back(0);
    } else if (t == 1) {
      ++pos.heaps.back();
    }
  }
  return pos;
}

inline unsigned grundy(const Position& pos) noexcept {
  unsigned g = 0;
  for (unsigned h : pos.heaps) g ^= h;
  return g;
}

inline constexpr unsigned oracle_budget = 24;

namespace detail {

inline unsigned mex_grundy(std::vector<unsigned> heaps, std::map<std::vector<unsigned>, unsigned>& memo) {
  std::sort(heaps.begin(), heaps.end());
  heaps.erase(heaps.begin(), std::find_if(heaps.begin(), heaps.end(), [](unsigned h) { return h != 0; }));
  if (heaps.empty()) return 0;
  if (auto it = memo.find(heaps); it != memo.end()) return it->second;

  std::vector<bool> seen;
  for (std::size_t i = 0; i < heaps.size(); ++i) {
    if (i > 0 && heaps[i] == heaps[i - 1]) continue;
    for (unsigned take = 1; take <= heaps[i]; ++take) {
      auto child = heaps;
      child[i] -= take;
      const unsigned g = mex_grundy(std::move(child), memo);
      if (g >= seen.size()) seen.resize(g + 1, false);
      seen[g] = true;
    }
  }
  unsigned mex = 0;
  while (mex < seen.size() && seen[mex]) ++mex;
  memo.emplace(std::move(heaps), mex);
  return mex;
}

} // namespace detail

/// Sprague-Grundy value by exhaustive mex recursion, without using the XOR
/// rule. The memo is local to the call.
inline unsigned grundy_oracle(const Position& pos) {
  if (pos.total() > oracle_budget) {
    throw OracleBudgetError("oracle limited to " + std::to_string(oracle_budget) + " counters, got " +
                            std::to_string(pos.total()));
  }
  std::map<std::vector<unsigned>, unsigned> memo;
  return detail::mex_grundy(pos.heaps, memo);
}

/// True iff the player to move wins under normal play.
inline bool is_winning(const Position& pos) noexcept { return grundy(pos) != 0; }

inline std::vector<Move> legal_moves(const Position& pos) {
  std::vector<Move> moves;
  for (std::size_t i = 0; i < pos.heaps.size(); ++i) {
    for (unsigned take = 1; take <= pos.heaps[i]; ++take) moves.push_back({i, take});
  }
  return moves;
}

/// Moves to a grundy-0 child; empty iff `pos` is already losing.
inline std::vector<Move> winning_moves(const Position& pos) {
  if (pos.terminal()) throw NoMovesError("terminal position has no moves");
  const unsigned g = grundy(pos);
  std::vector<Move> moves;
  if (g == 0) return moves;
  for (std::size_t i = 0; i < pos.heaps.size(); ++i) {
    const unsigned target = pos.heaps[i] ^ g;
    if (target < pos.heaps[i]) moves.push_back({i, pos.heaps[i] - target});
  }
  return moves;
}

} // namespace paritylab::nim
