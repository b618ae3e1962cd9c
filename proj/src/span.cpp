#include "alqa/span.hpp"

#include <cmath>

#include "alqa/errors.hpp"

namespace alqa {

void check_distribution(const SpanDistribution& dist, double tol) {
  const auto n = dist.start_probs.size();
  if (n < 1) throw ArgumentError("span distribution is empty");
  if (dist.end_probs.size() != n || static_cast<Eigen::Index>(dist.token_offsets.size()) != n) {
    throw ArgumentError("span distribution length mismatch");
  }
  for (const auto* v : {&dist.start_probs, &dist.end_probs}) {
    if (!v->allFinite() || (v->array() < 0.0).any()) {
      throw ArgumentError("span probabilities must be finite and non-negative");
    }
    if (std::abs(v->sum() - 1.0) > tol) throw ArgumentError("span probabilities must sum to 1");
  }
  for (std::size_t i = 0; i < dist.token_offsets.size(); ++i) {
    const auto& r = dist.token_offsets[i];
    if (r.begin > r.end) throw ArgumentError("token offset with begin > end");
    if (i > 0 && dist.token_offsets[i - 1].end > r.begin) {
      throw ArgumentError("token offsets overlap or are not ascending");
    }
  }
}

AnswerSpan decode_answer(const SpanDistribution& dist, std::string_view context,
                         int max_span_tokens) {
  if (max_span_tokens < 1) throw ArgumentError("max_span_tokens must be >= 1");
  const auto n = dist.size();
  if (n < 1 || dist.end_probs.size() != n) throw ArgumentError("invalid span distribution");

  AnswerSpan best;
  best.score = -1.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::Index last = std::min<Eigen::Index>(n - 1, i + max_span_tokens - 1);
    for (Eigen::Index j = i; j <= last; ++j) {
      const double s = dist.start_probs[i] + dist.end_probs[j];
      if (s > best.score) {
        best.score = s;
        best.token_start = i;
        best.token_end = j;
      }
    }
  }

  const Utf8Text text(context);
  const auto begin = dist.token_offsets[static_cast<std::size_t>(best.token_start)].begin;
  const auto end = dist.token_offsets[static_cast<std::size_t>(best.token_end)].end;
  if (end > text.size()) throw ArgumentError("token offsets exceed context length");
  best.text = text.substr(begin, end);
  return best;
}

}  // namespace alqa
