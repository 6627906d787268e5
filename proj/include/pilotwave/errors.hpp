#pragma once

#include <stdexcept>
#include <string>

namespace pilotwave {

/// Raised when an internal invariant is broken by an algorithm (not by the
/// caller's input). Seeing one of these means a bug or numerical drift.
class InvariantViolation : public std::logic_error {
 public:
  explicit InvariantViolation(const std::string& what) : std::logic_error(what) {}
};

}  // namespace pilotwave
