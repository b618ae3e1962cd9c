#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "alqa/backend.hpp"
#include "alqa/dataset.hpp"

namespace alqa {

/// SQuAD v1.1 answer normalization: lowercase, drop ASCII punctuation, drop
/// the articles a/an/the, collapse whitespace.
std::string normalize_answer(std::string_view s);

/// Token-multiset F1 of normalized strings, in [0, 1]. Two empty answers
/// score 1, exactly one empty answer scores 0.
double token_f1(std::string_view prediction, std::string_view gold);

/// 1 iff the normalized strings are equal.
int exact_match(std::string_view prediction, std::string_view gold);

/// Means scaled to [0, 100].
struct EvalResult {
  double f1 = 0.0;
  double em = 0.0;
  std::size_t n_examples = 0;
};

/// Decodes the backend's prediction for every instance and scores it
/// against the gold answer.
EvalResult evaluate(Backend& backend, const ModelHandle& model, const Dataset& eval_set,
                    int max_span_tokens = kDefaultMaxSpanTokens);

struct Checkpoint {
  long long step = 0;
  double f1 = 0.0;
};

/// F1 per checkpoint, labels strictly increasing.
class LearningCurve {
 public:
  /// Throws ArgumentError if empty or labels do not strictly increase.
  explicit LearningCurve(std::vector<Checkpoint> points);

  const std::vector<Checkpoint>& points() const { return points_; }
  std::vector<long long> steps() const;

 private:
  std::vector<Checkpoint> points_;
};

/// Area under the learning curve: the arithmetic mean of the checkpoint F1
/// values. Checkpoint labels do not enter the value.
double auc(const LearningCurve& curve);

/// One-decimal display form ("71.3").
std::string format_one_decimal(double value);

}  // namespace alqa
