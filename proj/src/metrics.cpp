#include "alqa/metrics.hpp"

#include <cctype>
#include <cstdio>
#include <map>
#include <sstream>

#include "alqa/errors.hpp"
#include "alqa/text.hpp"

namespace alqa {

namespace {

bool is_ascii_punct(char c) {
  return (c >= 0x21 && c <= 0x2F) || (c >= 0x3A && c <= 0x40) || (c >= 0x5B && c <= 0x60) ||
         (c >= 0x7B && c <= 0x7E);
}

std::vector<std::string> normalized_tokens(std::string_view s) {
  std::istringstream in(normalize_answer(s));
  std::vector<std::string> out;
  for (std::string tok; in >> tok;) out.push_back(tok);
  return out;
}

}  // namespace

std::string normalize_answer(std::string_view s) {
  // lowercase (ASCII and Latin-1 capitals), then strip punctuation
  const Utf8Text text(s);
  std::string stripped;
  stripped.reserve(s.size());
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char32_t c = text[i];
    if (c < 0x80) {
      char ch = static_cast<char>(c);
      if (is_ascii_punct(ch)) continue;
      if (ch >= 'A' && ch <= 'Z') ch = static_cast<char>(ch - 'A' + 'a');
      stripped += ch;
    } else if (c >= 0xC0 && c <= 0xDE && c != 0xD7) {
      const char32_t lower = c + 0x20;
      stripped += static_cast<char>(0xC0 | (lower >> 6));
      stripped += static_cast<char>(0x80 | (lower & 0x3F));
    } else {
      stripped += text.substr(i, i + 1);
    }
  }

  // drop articles, collapse whitespace
  std::string out;
  std::size_t i = 0;
  while (i < stripped.size()) {
    while (i < stripped.size() && std::isspace(static_cast<unsigned char>(stripped[i]))) ++i;
    std::size_t j = i;
    while (j < stripped.size() && !std::isspace(static_cast<unsigned char>(stripped[j]))) ++j;
    if (j > i) {
      const std::string_view word(stripped.data() + i, j - i);
      if (word != "a" && word != "an" && word != "the") {
        if (!out.empty()) out += ' ';
        out += word;
      }
    }
    i = j;
  }
  return out;
}

double token_f1(std::string_view prediction, std::string_view gold) {
  const auto pred = normalized_tokens(prediction);
  const auto ref = normalized_tokens(gold);
  if (pred.empty() && ref.empty()) return 1.0;
  if (pred.empty() || ref.empty()) return 0.0;

  std::map<std::string, int> counts;
  for (const auto& t : ref) ++counts[t];
  int common = 0;
  for (const auto& t : pred) {
    auto it = counts.find(t);
    if (it != counts.end() && it->second > 0) {
      --it->second;
      ++common;
    }
  }
  if (common == 0) return 0.0;
  const double precision = static_cast<double>(common) / static_cast<double>(pred.size());
  const double recall = static_cast<double>(common) / static_cast<double>(ref.size());
  return 2.0 * precision * recall / (precision + recall);
}

int exact_match(std::string_view prediction, std::string_view gold) {
  return normalize_answer(prediction) == normalize_answer(gold) ? 1 : 0;
}

EvalResult evaluate(Backend& backend, const ModelHandle& model, const Dataset& eval_set,
                    int max_span_tokens) {
  if (eval_set.empty()) throw ArgumentError("evaluation set is empty");
  double f1 = 0.0;
  double em = 0.0;
  for (const auto& inst : eval_set) {
    const auto dist = backend.predict(model, inst.question, inst.context);
    const auto span = decode_answer(dist, inst.context, max_span_tokens);
    f1 += token_f1(span.text, inst.answer_text);
    em += exact_match(span.text, inst.answer_text);
  }
  const auto n = static_cast<double>(eval_set.size());
  return {100.0 * f1 / n, 100.0 * em / n, eval_set.size()};
}

LearningCurve::LearningCurve(std::vector<Checkpoint> points) : points_(std::move(points)) {
  if (points_.empty()) throw ArgumentError("learning curve needs at least one checkpoint");
  for (std::size_t i = 1; i < points_.size(); ++i) {
    if (points_[i].step <= points_[i - 1].step) {
      throw ArgumentError("learning curve checkpoints must strictly increase");
    }
  }
}

std::vector<long long> LearningCurve::steps() const {
  std::vector<long long> out;
  out.reserve(points_.size());
  for (const auto& p : points_) out.push_back(p.step);
  return out;
}

double auc(const LearningCurve& curve) {
  double sum = 0.0;
  for (const auto& p : curve.points()) sum += p.f1;
  return sum / static_cast<double>(curve.points().size());
}

std::string format_one_decimal(double value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.1f", value);
  return buf;
}

}  // namespace alqa
