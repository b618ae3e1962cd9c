#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>

#include <Eigen/Core>

#include "alqa/dataset.hpp"
#include "alqa/span.hpp"

namespace alqa {

/// Fixed-length text representation produced by a backend.
using Embedding = Eigen::VectorXd;

/// Names a model state: which backend, how many fine-tune calls it has
/// absorbed (`t`), and its embedding width.
struct ModelHandle {
  std::string backend;
  std::size_t t = 0;
  Eigen::Index dim = 0;

  friend bool operator==(const ModelHandle&, const ModelHandle&) = default;
};

/// Model backend contract.
///
/// embed and predict are deterministic for a fixed handle and input.
/// fine_tune continues training from the current state (warm start) and
/// returns the next handle; it must not run concurrently with any other call.
/// Backends reject handles that do not name their current state.
class Backend {
 public:
  virtual ~Backend() = default;

  virtual ModelHandle current() const = 0;

  /// Throws ArgumentError on empty text, TransportError if unreachable.
  virtual Embedding embed(const ModelHandle& m, std::string_view text) = 0;

  /// Throws ArgumentError if either text is empty or the context has no tokens.
  virtual SpanDistribution predict(const ModelHandle& m, std::string_view question,
                                   std::string_view context) = 0;

  /// Throws ArgumentError on an empty batch.
  virtual ModelHandle fine_tune(const ModelHandle& m, std::span<const QAInstance> labeled) = 0;
};

}  // namespace alqa
