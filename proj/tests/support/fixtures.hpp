#pragma once

// Deterministic corpora and helpers shared by the test binaries.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "alqa/dataset.hpp"
#include "alqa/synthetic_backend.hpp"

namespace fixtures {

/// Pronounceable lowercase word, distinct for every index.
std::string word(std::size_t index);

/// Capitalizes the first letter.
std::string capitalized(std::string w);

/// Sentence "W1 w2 ... wn." from the given words.
std::string sentence(const std::vector<std::string>& words);

/// Builds an instance whose answer is `answer_word`, which must occur in
/// `context` as a whole word.
alqa::QAInstance make_instance(std::string id, std::string question, std::string context,
                               const std::string& answer_word);

/// `n` instances; instance i draws its words from topic (i % topics), whose
/// vocabularies are disjoint. Each context has three sentences; the
/// question repeats two context words and the answer is a third.
alqa::Dataset topic_pool(std::size_t n, std::size_t topics, std::uint64_t seed);

/// `groups * per_group` instances whose vocabularies hash to disjoint
/// buckets under `backend`, so their embeddings are orthogonal across
/// groups and identical within one. Ids are "g<group>-<k>"; group(i) = i / per_group.
alqa::Dataset bucket_separated_pool(const alqa::SyntheticBackend& backend, std::size_t groups,
                                    std::size_t per_group, std::uint64_t seed);

/// Candidates "c0000".. and labeled instances "l0000".. with globally
/// unique words. For each sensitive candidate there is one labeled
/// instance whose single sentence repeats both of the candidate's question
/// words, so appending it changes the synthetic prediction on the original
/// tokens. Every other candidate's question words appear nowhere else.
struct PalPool {
  alqa::Dataset pool;
  std::vector<std::string> labeled;
  std::vector<std::string> unlabeled;
  std::vector<std::string> sensitive;
};
PalPool pal_pool(std::size_t candidates, std::size_t sensitive);

/// SQuAD v1.1 JSON text for the given paragraphs.
struct SquadQa {
  std::string id;
  std::string question;
  std::string answer;
  long long answer_start;
};
struct SquadParagraph {
  std::string context;
  std::vector<SquadQa> qas;
};
std::string squad_json(const std::vector<std::vector<SquadParagraph>>& articles);

/// Fresh empty directory under the build tree, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag);
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

void write_text(const std::filesystem::path& p, const std::string& body);
std::string read_text(const std::filesystem::path& p);

}  // namespace fixtures
