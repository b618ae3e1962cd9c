#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "alqa/text.hpp"

namespace alqa {

/// Per-token start/end probabilities over a context, with each token's
/// scalar range in the raw context. The offsets travel with the
/// probabilities so the engine never depends on a particular tokenizer.
struct SpanDistribution {
  Eigen::VectorXd start_probs;
  Eigen::VectorXd end_probs;
  std::vector<CharRange> token_offsets;

  Eigen::Index size() const { return start_probs.size(); }
};

/// Throws ArgumentError unless lengths agree and are >= 1, probabilities are
/// non-negative and sum to 1 within `tol`, and offsets ascend without overlap.
void check_distribution(const SpanDistribution& dist, double tol = 1e-6);

struct AnswerSpan {
  Eigen::Index token_start = 0;
  Eigen::Index token_end = 0;
  double score = 0.0;
  std::string text;
};

inline constexpr int kDefaultMaxSpanTokens = 30;

/// Highest scoring span where score = start_probs[i] + end_probs[j], over
/// i <= j < i + max_span_tokens. Ties go to the smaller i, then smaller j.
AnswerSpan decode_answer(const SpanDistribution& dist, std::string_view context,
                         int max_span_tokens = kDefaultMaxSpanTokens);

}  // namespace alqa
