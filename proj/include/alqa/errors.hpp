#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace alqa {

/// Precondition violated by the caller (empty text, bad dimension, k out of range, ...).
class ArgumentError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Malformed input bytes. `offset()` is the byte position where parsing stopped.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t offset)
      : std::runtime_error(what), offset_(offset) {}
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

/// Well-formed input that breaks a data invariant (e.g. answer offset mismatch).
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class LookupError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

/// The external backend could not be reached or stopped answering.
class TransportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// No labeled instance with a different context is available for the query.
class NoEligibleNeighbors : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Every PAL candidate was skipped; the loop falls back to least confidence.
class PalStarved : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace alqa
