#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace rpca {

/// Precondition violated by the caller (bad dimension, bad config, ...).
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// The algorithm reached a state with no meaningful continuation
/// (no surviving points, zero operator, ...).
class DegenerateState : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A sample source ran dry. Carries how many samples had been consumed.
class StreamExhausted : public std::runtime_error {
 public:
  StreamExhausted(const std::string& what, std::uint64_t consumed)
      : std::runtime_error(what), consumed_(consumed) {}

  std::uint64_t samples_consumed() const noexcept { return consumed_; }

 private:
  std::uint64_t consumed_;
};

/// Broken internal invariant (runaway loop, memory budget overrun).
class InternalError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// A dense diagnostic was requested beyond its size budget.
class UnsupportedDiagnostic : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace rpca
