#include "fixtures.hpp"

#include <fstream>
#include <regex>
#include <sstream>
#include <stdexcept>

#include <unistd.h>

#include <json.hpp>

#include "alqa/sampling.hpp"
#include "alqa/text.hpp"

namespace fixtures {

namespace {
const char* const kSyllables[] = {"ka", "lo", "mi", "ne", "ru", "ta", "vo", "zi", "be", "do",
                                  "fu", "ga", "hi", "jo", "ku", "le", "ma", "no", "pe", "ri",
                                  "sa", "te", "vu", "wa", "xo", "yu", "ze", "bi", "co", "di"};
constexpr std::size_t kSyl = sizeof(kSyllables) / sizeof(kSyllables[0]);
}  // namespace

std::string word(std::size_t index) {
  // three syllables give 27000 distinct words; a fourth extends the range
  std::string w;
  std::size_t x = index;
  for (int k = 0; k < 3; ++k) {
    w += kSyllables[x % kSyl];
    x /= kSyl;
  }
  if (x > 0) w += kSyllables[x % kSyl];
  return w;
}

std::string capitalized(std::string w) {
  if (!w.empty() && w[0] >= 'a' && w[0] <= 'z') w[0] = static_cast<char>(w[0] - 'a' + 'A');
  return w;
}

std::string sentence(const std::vector<std::string>& words) {
  std::string s;
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (i) s += ' ';
    s += i == 0 ? capitalized(words[i]) : words[i];
  }
  return s + ".";
}

alqa::QAInstance make_instance(std::string id, std::string question, std::string context,
                               const std::string& answer_word) {
  const std::regex re("\\b" + answer_word + "\\b");
  std::smatch m;
  if (!std::regex_search(context, m, re)) {
    throw std::invalid_argument("answer word not in context: " + answer_word);
  }
  alqa::QAInstance inst;
  inst.id = std::move(id);
  inst.question = std::move(question);
  inst.answer_start = alqa::scalar_length(std::string_view(context).substr(0, static_cast<std::size_t>(m.position(0))));
  inst.context = std::move(context);
  inst.answer_text = answer_word;
  return inst;
}

alqa::Dataset topic_pool(std::size_t n, std::size_t topics, std::uint64_t seed) {
  constexpr std::size_t kVocab = 40;
  alqa::Rng rng(seed);
  std::vector<alqa::QAInstance> out;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t topic = i % topics;
    auto pick = [&] { return word(topic * kVocab + rng.index(kVocab)); };
    std::vector<std::vector<std::string>> sentences(3);
    for (auto& s : sentences) {
      for (int w = 0; w < 6; ++w) s.push_back(pick());
    }
    // an instance-unique answer word keeps contexts distinct
    const std::string answer = word(100000 + i);
    sentences[1][3] = answer;
    std::string context;
    for (const auto& s : sentences) context += (context.empty() ? "" : " ") + sentence(s);
    const std::string question =
        "What " + sentences[1][1] + " " + sentences[1][2] + " " + sentences[1][4] + "?";
    char id[32];
    std::snprintf(id, sizeof id, "q%04zu", i);
    out.push_back(make_instance(id, question, context, answer));
  }
  return alqa::Dataset(std::move(out));
}

alqa::Dataset bucket_separated_pool(const alqa::SyntheticBackend& backend, std::size_t groups,
                                    std::size_t per_group, std::uint64_t seed) {
  constexpr std::size_t kWords = 8;
  std::vector<std::vector<std::string>> vocab(groups);
  std::vector<int> owner(static_cast<std::size_t>(backend.current().dim), -1);
  std::size_t next = 200000;
  for (std::size_t g = 0; g < groups; ++g) {
    while (vocab[g].size() < kWords) {
      const std::string w = word(next++);
      auto& o = owner[backend.bucket(w)];
      if (o == -1) o = static_cast<int>(g);
      if (o == static_cast<int>(g)) vocab[g].push_back(w);
    }
  }
  alqa::Rng rng(seed);
  std::vector<alqa::QAInstance> out;
  for (std::size_t g = 0; g < groups; ++g) {
    for (std::size_t k = 0; k < per_group; ++k) {
      // every member shuffles the same word multiset, so a group embeds to one point
      std::vector<std::string> bag(vocab[g]);
      bag.insert(bag.end(), vocab[g].begin(), vocab[g].begin() + 4);
      for (std::size_t i = bag.size() - 1; i > 0; --i) std::swap(bag[i], bag[rng.index(i + 1)]);
      const std::vector<std::vector<std::string>> s = {{bag.begin(), bag.begin() + 6}, {bag.begin() + 6, bag.end()}};
      const std::string context = sentence(s[0]) + " " + sentence(s[1]);
      const std::string question = capitalized(vocab[g][0]) + " " + vocab[g][1] + "?";
      char id[48];
      std::snprintf(id, sizeof id, "g%zu-%02zu", g, k);
      // answer is the third word of the first sentence, found by position
      alqa::QAInstance inst;
      inst.id = id;
      inst.question = question;
      inst.context = context;
      inst.answer_text = s[0][2];
      inst.answer_start = alqa::scalar_length(s[0][0]) + 1 + alqa::scalar_length(s[0][1]) + 1;
      out.push_back(inst);
    }
  }
  return alqa::Dataset(std::move(out));
}

PalPool pal_pool(std::size_t candidates, std::size_t sensitive) {
  if (sensitive == 0 || sensitive > candidates) throw std::invalid_argument("bad sensitive count");
  const std::size_t stride = candidates / sensitive;
  std::vector<alqa::QAInstance> items;
  PalPool out;
  for (std::size_t i = 0; i < candidates; ++i) {
    std::vector<std::string> w;
    for (std::size_t j = 0; j < 16; ++j) w.push_back(word(300000 + i * 16 + j));
    const std::string context = sentence({w.begin(), w.begin() + 6}) + " " + sentence({w.begin() + 6, w.begin() + 12});
    char id[32];
    std::snprintf(id, sizeof id, "c%04zu", i);
    items.push_back(make_instance(id, "What " + w[1] + " " + w[4] + "?", context, w[3]));
    out.unlabeled.push_back(id);
    if (i % stride == stride / 2 && out.sensitive.size() < sensitive) {
      out.sensitive.push_back(id);
      std::snprintf(id, sizeof id, "l%04zu", i);
      const std::string lctx = sentence({w[0], w[1], w[2], w[4], w[5], w[14]});
      items.push_back(make_instance(id, "Which " + w[15] + "?", lctx, w[14]));
      out.labeled.push_back(id);
    }
  }
  out.pool = alqa::Dataset(std::move(items));
  return out;
}

std::string squad_json(const std::vector<std::vector<SquadParagraph>>& articles) {
  nlohmann::json data = nlohmann::json::array();
  for (const auto& article : articles) {
    nlohmann::json paragraphs = nlohmann::json::array();
    for (const auto& p : article) {
      nlohmann::json qas = nlohmann::json::array();
      for (const auto& qa : p.qas) {
        qas.push_back({{"id", qa.id},
                       {"question", qa.question},
                       {"answers", {{{"text", qa.answer}, {"answer_start", qa.answer_start}}}}});
      }
      paragraphs.push_back({{"context", p.context}, {"qas", qas}});
    }
    data.push_back({{"title", "t"}, {"paragraphs", paragraphs}});
  }
  return nlohmann::json{{"version", "1.1"}, {"data", data}}.dump(1);
}

TempDir::TempDir(const std::string& tag) {
  static int counter = 0;
  path_ = std::filesystem::current_path() / ("tmp_" + tag + "_" + std::to_string(::getpid()) +
                                             "_" + std::to_string(counter++));
  std::filesystem::remove_all(path_);
  std::filesystem::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

void write_text(const std::filesystem::path& p, const std::string& body) {
  std::ofstream out(p, std::ios::binary);
  out << body;
}

std::string read_text(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace fixtures
