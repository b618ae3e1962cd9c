#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace alqa {

/// One question/context/gold-answer triple. `answer_start` is a Unicode
/// scalar offset into `context`.
struct QAInstance {
  std::string id;
  std::string question;
  std::string context;
  std::string answer_text;
  std::size_t answer_start = 0;

  friend bool operator==(const QAInstance&, const QAInstance&) = default;
};

/// Throws ValidationError if the answer does not sit at `answer_start` or a
/// required field is empty.
void validate_instance(const QAInstance& inst);

/// Immutable, ordered collection of instances with unique ids.
class Dataset {
 public:
  Dataset() = default;
  /// Validates every instance and id uniqueness.
  explicit Dataset(std::vector<QAInstance> instances);

  std::size_t size() const { return instances_.size(); }
  bool empty() const { return instances_.empty(); }
  const QAInstance& operator[](std::size_t i) const { return instances_[i]; }
  auto begin() const { return instances_.begin(); }
  auto end() const { return instances_.end(); }
  const std::vector<QAInstance>& instances() const { return instances_; }

  bool contains(std::string_view id) const;
  /// Throws LookupError for unknown ids.
  const QAInstance& at(std::string_view id) const;

 private:
  std::vector<QAInstance> instances_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Reads SQuAD v1.1 JSON. One instance per question using its first answer;
/// ids are "<article>-<paragraph>-<qa id>". Answer starts that are off by a
/// few scalars are repaired by searching within +-5 of the stated start.
Dataset parse_squad(std::string_view json_bytes);
Dataset load_squad(const std::filesystem::path& path);

/// SQuAD v1.1 layout; consecutive instances sharing a context become one paragraph.
std::string to_squad_json(const Dataset& d);

/// Keeps the first instance (in dataset order) of every distinct context.
Dataset subset_one_per_context(const Dataset& d);

struct GoldAnswer {
  std::string text;
  std::size_t char_start = 0;

  friend bool operator==(const GoldAnswer&, const GoldAnswer&) = default;
};

/// Simulated annotator: returns the stored gold answer for `id`.
GoldAnswer oracle_label(std::string_view id, const Dataset& d);

// Line-oriented dump: id, question, context, answer, char_start separated by
// tabs; backslash, tab, CR and newline inside text are escaped.
std::string write_dump(const Dataset& d);
Dataset read_dump(std::string_view text);

std::string escape_field(std::string_view s);
std::string unescape_field(std::string_view s);

}  // namespace alqa
