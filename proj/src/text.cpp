#include "alqa/text.hpp"

#include "alqa/errors.hpp"

namespace alqa {

namespace {

// Returns the scalar and advances `pos`; throws on malformed sequences.
char32_t decode_one(std::string_view s, std::size_t& pos) {
  const auto lead = static_cast<unsigned char>(s[pos]);
  int extra = 0;
  char32_t cp = 0;
  if (lead < 0x80) {
    ++pos;
    return lead;
  } else if ((lead & 0xE0) == 0xC0) {
    extra = 1;
    cp = lead & 0x1F;
  } else if ((lead & 0xF0) == 0xE0) {
    extra = 2;
    cp = lead & 0x0F;
  } else if ((lead & 0xF8) == 0xF0) {
    extra = 3;
    cp = lead & 0x07;
  } else {
    throw ParseError("invalid UTF-8 lead byte", pos);
  }
  if (pos + extra >= s.size()) {
    throw ParseError("truncated UTF-8 sequence", pos);
  }
  for (int k = 1; k <= extra; ++k) {
    const auto cont = static_cast<unsigned char>(s[pos + k]);
    if ((cont & 0xC0) != 0x80) throw ParseError("invalid UTF-8 continuation byte", pos + k);
    cp = (cp << 6) | (cont & 0x3F);
  }
  pos += extra + 1;
  return cp;
}

}  // namespace

Utf8Text::Utf8Text(std::string_view utf8) : utf8_(utf8) {
  scalars_.reserve(utf8.size());
  byte_offsets_.reserve(utf8.size() + 1);
  std::size_t pos = 0;
  while (pos < utf8.size()) {
    byte_offsets_.push_back(pos);
    scalars_.push_back(decode_one(utf8, pos));
  }
  byte_offsets_.push_back(utf8.size());
}

std::string Utf8Text::substr(std::size_t begin, std::size_t end) const {
  if (begin > end || end > size()) throw ArgumentError("scalar range out of bounds");
  return utf8_.substr(byte_offsets_[begin], byte_offsets_[end] - byte_offsets_[begin]);
}

std::size_t scalar_length(std::string_view utf8) {
  std::size_t n = 0;
  for (char c : utf8) {
    if ((static_cast<unsigned char>(c) & 0xC0) != 0x80) ++n;
  }
  return n;
}

bool is_space(char32_t c) {
  return c == U' ' || c == U'\t' || c == U'\n' || c == U'\r' || c == U'\f' || c == U'\v' ||
         c == 0xA0 || (c >= 0x2000 && c <= 0x200A) || c == 0x202F || c == 0x205F ||
         c == 0x3000;
}

bool is_punct(char32_t c) {
  if (c < 0x80) {
    return (c >= 0x21 && c <= 0x2F) || (c >= 0x3A && c <= 0x40) || (c >= 0x5B && c <= 0x60) ||
           (c >= 0x7B && c <= 0x7E);
  }
  return c == 0xA1 || c == 0xAB || c == 0xBB || c == 0xBF || (c >= 0x2010 && c <= 0x2027) ||
         (c >= 0x2030 && c <= 0x205E);
}

bool is_upper(char32_t c) {
  return (c >= U'A' && c <= U'Z') || (c >= 0xC0 && c <= 0xDE && c != 0xD7);
}

std::vector<CharRange> tokenize(const Utf8Text& text) {
  std::vector<CharRange> out;
  const std::size_t n = text.size();
  std::size_t i = 0;
  while (i < n) {
    const char32_t c = text[i];
    if (is_space(c)) {
      ++i;
    } else if (is_punct(c)) {
      out.push_back({i, i + 1});
      ++i;
    } else {
      std::size_t j = i + 1;
      while (j < n && !is_space(text[j]) && !is_punct(text[j])) ++j;
      out.push_back({i, j});
      i = j;
    }
  }
  return out;
}

std::vector<CharRange> tokenize(std::string_view utf8) { return tokenize(Utf8Text(utf8)); }

std::string ascii_lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

std::vector<std::string> word_tokens(std::string_view utf8) {
  const Utf8Text text(utf8);
  std::vector<std::string> out;
  for (const auto& r : tokenize(text)) {
    if (r.size() == 1 && is_punct(text[r.begin])) continue;
    out.push_back(ascii_lower(text.substr(r)));
  }
  return out;
}

std::string trim(std::string_view s) {
  const Utf8Text text(s);
  std::size_t b = 0;
  std::size_t e = text.size();
  while (b < e && is_space(text[b])) ++b;
  while (e > b && is_space(text[e - 1])) --e;
  return text.substr(b, e);
}

std::vector<std::string> split_sentences(std::string_view utf8) {
  const Utf8Text text(utf8);
  const std::size_t n = text.size();
  std::vector<std::string> out;
  auto emit = [&](std::size_t b, std::size_t e) {
    auto piece = trim(text.substr(b, e));
    if (!piece.empty()) out.push_back(std::move(piece));
  };
  std::size_t start = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const char32_t c = text[i];
    if (c != U'.' && c != U'?' && c != U'!') continue;
    std::size_t j = i + 1;
    while (j < n && is_space(text[j])) ++j;
    const bool at_end = j == n;
    const bool before_upper = j > i + 1 && j < n && is_upper(text[j]);
    if (at_end || before_upper) {
      emit(start, i + 1);
      start = i + 1;
    }
  }
  emit(start, n);
  return out;
}

}  // namespace alqa
