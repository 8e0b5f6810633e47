// SPDX-License-Identifier: Apache-2.0
#pragma once

// Trit strings over {-1, 0, 1}, the parity-with-noise function over them, and
// the textual literal form used on the command line (`1`, `0`, `m` for -1).

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "paritylab/error.hpp"

namespace paritylab {

using Trit = std::int8_t;

/// Immutable, nonempty sequence of trits.
class Bitstring {
public:
  explicit Bitstring(std::vector<Trit> values) : values_(std::move(values)) { validate(); }

  Bitstring(std::initializer_list<int> values) {
    values_.reserve(values.size());
    for (int v : values) {
      if (v < -1 || v > 1) throw DomainError("trit out of range: " + std::to_string(v));
      values_.push_back(static_cast<Trit>(v));
    }
    validate();
  }

  /// Parses a literal such as `110m0`.
  static Bitstring parse(std::string_view literal) {
    std::vector<Trit> values;
    values.reserve(literal.size());
    for (char ch : literal) {
      switch (ch) {
      case '1': values.push_back(1); break;
      case '0': values.push_back(0); break;
      case 'm': values.push_back(-1); break;
      default:
        throw DomainError("invalid character '" + std::string(1, ch) + "' in bitstring literal");
      }
    }
    return Bitstring(std::move(values));
  }

  std::string literal() const {
    std::string out;
    out.reserve(values_.size());
    for (Trit t : values_) out.push_back(t == 1 ? '1' : (t == 0 ? '0' : 'm'));
    return out;
  }

  std::size_t size() const noexcept { return values_.size(); }
  Trit operator[](std::size_t i) const noexcept { return values_[i]; }
  std::span<const Trit> values() const noexcept { return values_; }
  auto begin() const noexcept { return values_.begin(); }
  auto end() const noexcept { return values_.end(); }

  friend bool operator==(const Bitstring&, const Bitstring&) = default;

private:
  void validate() const {
    if (values_.empty()) throw DomainError("bitstring must have length >= 1");
    for (Trit t : values_) {
      if (t < -1 || t > 1) throw DomainError("trit out of range: " + std::to_string(int{t}));
    }
  }

  std::vector<Trit> values_;
};

/// Count of elements equal to 1, mod 2. Zeros and -1 separators never count.
inline int parity(const Bitstring& bits) noexcept {
  return static_cast<int>(std::count(bits.begin(), bits.end(), Trit{1}) & 1);
}

/// Number of nonzero elements.
inline std::size_t hamming_weight(const Bitstring& bits) noexcept {
  return static_cast<std::size_t>(bits.size() - std::count(bits.begin(), bits.end(), Trit{0}));
}

} // namespace paritylab
