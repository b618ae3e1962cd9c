#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "alqa/backend.hpp"

namespace alqa {

/// Deterministic stand-in for a fine-tuned reader model.
///
/// embed: word tokens (lowercased, punctuation dropped) are hashed with a
/// seeded hash into `dim` buckets; the count vector is L2-normalized.
///
/// predict: every context token whose lowercased form appears among the
/// question's words gets affinity `kAffinity / c`, where c is how many times
/// that word occurs in the whole context. Start and end logits both start at
/// the affinity. Contexts memorized through fine_tune (matched exactly or as
/// a prefix ending at a token boundary) get `kMemoryBoost` added to the
/// logit of each gold start and gold end token. Softmax gives the
/// probabilities.
///
/// Because affinity is shared among a word's occurrences, appending a
/// distractor that repeats a question word lowers the logits of the
/// original occurrences. Un-memorized instances are therefore measurably
/// sensitive to such distractors; memorized ones much less so.
class SyntheticBackend final : public Backend {
 public:
  static constexpr double kAffinity = 2.0;
  static constexpr double kMemoryBoost = 4.0;
  static constexpr Eigen::Index kDefaultDim = 64;

  explicit SyntheticBackend(std::uint64_t seed, Eigen::Index dim = kDefaultDim);

  ModelHandle current() const override { return handle_; }
  Embedding embed(const ModelHandle& m, std::string_view text) override;
  SpanDistribution predict(const ModelHandle& m, std::string_view question,
                           std::string_view context) override;
  ModelHandle fine_tune(const ModelHandle& m, std::span<const QAInstance> labeled) override;

  std::uint64_t seed() const { return seed_; }
  std::size_t bucket(std::string_view lowered_token) const;
  bool memorized(std::string_view context) const { return memory_.count(std::string(context)); }

 private:
  void check_handle(const ModelHandle& m) const;

  std::uint64_t seed_;
  ModelHandle handle_;
  // context -> gold (start token, end token) pairs
  std::unordered_map<std::string, std::vector<std::pair<std::size_t, std::size_t>>> memory_;
  std::set<std::size_t> memorized_lengths_;
};

}  // namespace alqa
