// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace paritylab {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// A value outside the domain of an operation (bad accuracy, empty batch, ...).
class DomainError : public Error {
public:
  using Error::Error;
};

class CapacityExceededError : public Error {
public:
  CapacityExceededError(std::size_t heap_index, unsigned heap, unsigned capacity)
      : Error("heap " + std::to_string(heap_index) + " holds " + std::to_string(heap) +
              " counters, capacity is " + std::to_string(capacity)),
        heap_index_(heap_index) {}

  std::size_t heap_index() const noexcept { return heap_index_; }

private:
  std::size_t heap_index_;
};

class OracleBudgetError : public Error {
public:
  using Error::Error;
};

class NoMovesError : public Error {
public:
  using Error::Error;
};

class NumericOverflowError : public Error {
public:
  using Error::Error;
};

class IoError : public Error {
public:
  using Error::Error;
};

} // namespace paritylab
