#include "alqa/synthetic_backend.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "alqa/errors.hpp"
#include "alqa/text.hpp"

namespace alqa {

namespace {

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

Eigen::VectorXd softmax(const Eigen::VectorXd& logits) {
  const Eigen::ArrayXd e = (logits.array() - logits.maxCoeff()).exp();
  return (e / e.sum()).matrix();
}

bool is_punct_token(const Utf8Text& text, const CharRange& r) {
  return r.size() == 1 && is_punct(text[r.begin]);
}

}  // namespace

SyntheticBackend::SyntheticBackend(std::uint64_t seed, Eigen::Index dim)
    : seed_(seed), handle_{"synthetic:" + std::to_string(seed), 0, dim} {
  if (dim < 1) throw ArgumentError("embedding dimension must be >= 1");
}

std::size_t SyntheticBackend::bucket(std::string_view lowered_token) const {
  return static_cast<std::size_t>(splitmix64(fnv1a(lowered_token) ^ seed_) %
                                  static_cast<std::uint64_t>(handle_.dim));
}

void SyntheticBackend::check_handle(const ModelHandle& m) const {
  if (m != handle_) {
    throw ArgumentError("model handle " + m.backend + "@" + std::to_string(m.t) +
                        " does not name the current state " + handle_.backend + "@" +
                        std::to_string(handle_.t));
  }
}

Embedding SyntheticBackend::embed(const ModelHandle& m, std::string_view text) {
  check_handle(m);
  if (text.empty()) throw ArgumentError("cannot embed empty text");
  Embedding v = Embedding::Zero(handle_.dim);
  for (const auto& tok : word_tokens(text)) v[static_cast<Eigen::Index>(bucket(tok))] += 1.0;
  const double norm = v.norm();
  if (norm > 0.0) v /= norm;
  return v;
}

SpanDistribution SyntheticBackend::predict(const ModelHandle& m, std::string_view question,
                                           std::string_view context) {
  check_handle(m);
  if (question.empty() || context.empty()) throw ArgumentError("question and context must be non-empty");
  const Utf8Text ctx(context);
  auto offsets = tokenize(ctx);
  if (offsets.empty()) throw ArgumentError("context has no tokens");

  const auto q_words = word_tokens(question);
  const std::unordered_set<std::string> q_set(q_words.begin(), q_words.end());

  const auto n = static_cast<Eigen::Index>(offsets.size());
  std::vector<std::string> lowered(offsets.size());
  std::unordered_map<std::string, int> counts;
  for (std::size_t i = 0; i < offsets.size(); ++i) {
    if (is_punct_token(ctx, offsets[i])) continue;
    lowered[i] = ascii_lower(ctx.substr(offsets[i]));
    ++counts[lowered[i]];
  }

  Eigen::VectorXd start_logits = Eigen::VectorXd::Zero(n);
  for (std::size_t i = 0; i < offsets.size(); ++i) {
    if (!lowered[i].empty() && q_set.count(lowered[i])) {
      start_logits[static_cast<Eigen::Index>(i)] = kAffinity / counts[lowered[i]];
    }
  }
  Eigen::VectorXd end_logits = start_logits;

  // Longest memorized context that is the whole text or a prefix ending at a token boundary.
  for (auto it = memorized_lengths_.rbegin(); it != memorized_lengths_.rend(); ++it) {
    const std::size_t len = *it;
    if (len > ctx.size()) continue;
    if (len < ctx.size() && !is_space(ctx[len])) continue;
    auto found = memory_.find(ctx.substr(0, len));
    if (found == memory_.end()) continue;
    for (const auto& [s, e] : found->second) {
      start_logits[static_cast<Eigen::Index>(s)] += kMemoryBoost;
      end_logits[static_cast<Eigen::Index>(e)] += kMemoryBoost;
    }
    break;
  }

  SpanDistribution out;
  out.start_probs = softmax(start_logits);
  out.end_probs = softmax(end_logits);
  out.token_offsets = std::move(offsets);
  return out;
}

ModelHandle SyntheticBackend::fine_tune(const ModelHandle& m, std::span<const QAInstance> labeled) {
  check_handle(m);
  if (labeled.empty()) throw ArgumentError("fine_tune needs a non-empty batch");
  for (const auto& inst : labeled) {
    const Utf8Text ctx(inst.context);
    const auto offsets = tokenize(ctx);
    const std::size_t a_begin = inst.answer_start;
    const std::size_t a_end = a_begin + scalar_length(inst.answer_text);
    std::size_t s = offsets.size();
    std::size_t e = 0;
    for (std::size_t i = 0; i < offsets.size(); ++i) {
      if (s == offsets.size() && offsets[i].end > a_begin) s = i;
      if (offsets[i].begin < a_end) e = i;
    }
    if (s == offsets.size()) continue;
    e = std::max(e, s);
    auto& spans = memory_[inst.context];
    if (std::find(spans.begin(), spans.end(), std::pair{s, e}) == spans.end()) {
      spans.emplace_back(s, e);
    }
    memorized_lengths_.insert(ctx.size());
  }
  ++handle_.t;
  return handle_;
}

}  // namespace alqa
