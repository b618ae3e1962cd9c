#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace alqa {

/// Half-open range [begin, end) of Unicode scalar positions in a text.
struct CharRange {
  std::size_t begin = 0;
  std::size_t end = 0;

  std::size_t size() const { return end - begin; }
  friend bool operator==(const CharRange&, const CharRange&) = default;
};

/// UTF-8 text indexed by Unicode scalar value. All offsets the engine
/// exchanges (answer starts, token offsets) are scalar offsets, which is
/// what SQuAD and Python-side tokenizers report.
class Utf8Text {
 public:
  /// Throws ParseError on invalid UTF-8.
  explicit Utf8Text(std::string_view utf8);

  std::size_t size() const { return scalars_.size(); }
  bool empty() const { return scalars_.empty(); }
  char32_t operator[](std::size_t i) const { return scalars_[i]; }
  const std::u32string& scalars() const { return scalars_; }

  /// Byte offset of scalar `i` in the source string; `i == size()` is allowed.
  std::size_t byte_offset(std::size_t i) const { return byte_offsets_[i]; }

  std::string substr(std::size_t begin, std::size_t end) const;
  std::string substr(CharRange r) const { return substr(r.begin, r.end); }
  const std::string& str() const { return utf8_; }

 private:
  std::string utf8_;
  std::u32string scalars_;
  std::vector<std::size_t> byte_offsets_;
};

/// Number of Unicode scalars in a UTF-8 string.
std::size_t scalar_length(std::string_view utf8);

bool is_space(char32_t c);
bool is_punct(char32_t c);
bool is_upper(char32_t c);

/// Whitespace tokenization with each punctuation character split off as its
/// own token. Offsets index the raw text by scalar value and are ascending
/// and non-overlapping. Appending text never changes the offsets of earlier
/// tokens unless the appended text starts inside the last word.
std::vector<CharRange> tokenize(const Utf8Text& text);
std::vector<CharRange> tokenize(std::string_view utf8);

/// Token strings, ASCII-lowercased, with punctuation tokens dropped.
std::vector<std::string> word_tokens(std::string_view utf8);

std::string ascii_lower(std::string_view s);

/// Splits after '.', '?' or '!' when followed by whitespace and an uppercase
/// letter, or by end of text. Pieces are trimmed and empty pieces dropped.
/// Abbreviations such as "Dr. Smith" are split; that is a known limitation.
std::vector<std::string> split_sentences(std::string_view utf8);

std::string trim(std::string_view s);

}  // namespace alqa
