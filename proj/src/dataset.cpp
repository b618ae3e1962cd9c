#include "alqa/dataset.hpp"

#include <fstream>
#include <optional>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "alqa/errors.hpp"
#include "alqa/text.hpp"

namespace alqa {

using nlohmann::json;

namespace {

constexpr std::size_t kRepairWindow = 5;

bool answer_at(const Utf8Text& ctx, const Utf8Text& answer, std::size_t start) {
  if (start + answer.size() > ctx.size()) return false;
  return ctx.scalars().compare(start, answer.size(), answer.scalars()) == 0;
}

// Nearest offset within the repair window where the answer occurs.
std::optional<std::size_t> locate_answer(const std::string& context, const std::string& answer,
                                         std::size_t stated) {
  const Utf8Text ctx(context);
  const Utf8Text ans(answer);
  if (answer_at(ctx, ans, stated)) return stated;
  for (std::size_t delta = 1; delta <= kRepairWindow; ++delta) {
    if (delta <= stated && answer_at(ctx, ans, stated - delta)) return stated - delta;
    if (answer_at(ctx, ans, stated + delta)) return stated + delta;
  }
  return std::nullopt;
}

const json& require(const json& obj, const char* key, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) throw ValidationError("missing \"" + std::string(key) + "\" at " + where);
  return *it;
}

std::string qa_id_string(const json& qa) {
  const auto it = qa.find("id");
  if (it == qa.end()) return {};
  if (it->is_string()) return it->get<std::string>();
  return it->dump();
}

}  // namespace

void validate_instance(const QAInstance& inst) {
  if (inst.id.empty()) throw ValidationError("instance with empty id");
  if (inst.question.empty()) throw ValidationError("empty question in " + inst.id);
  if (inst.context.empty()) throw ValidationError("empty context in " + inst.id);
  if (inst.answer_text.empty()) throw ValidationError("empty answer in " + inst.id);
  if (!answer_at(Utf8Text(inst.context), Utf8Text(inst.answer_text), inst.answer_start)) {
    throw ValidationError("answer text does not match context at answer_start in " + inst.id);
  }
}

Dataset::Dataset(std::vector<QAInstance> instances) : instances_(std::move(instances)) {
  index_.reserve(instances_.size());
  for (std::size_t i = 0; i < instances_.size(); ++i) {
    validate_instance(instances_[i]);
    if (!index_.emplace(instances_[i].id, i).second) {
      throw ValidationError("duplicate instance id " + instances_[i].id);
    }
  }
}

bool Dataset::contains(std::string_view id) const { return index_.count(std::string(id)) != 0; }

const QAInstance& Dataset::at(std::string_view id) const {
  auto it = index_.find(std::string(id));
  if (it == index_.end()) throw LookupError("unknown instance id " + std::string(id));
  return instances_[it->second];
}

Dataset parse_squad(std::string_view json_bytes) {
  json root;
  try {
    root = json::parse(json_bytes.begin(), json_bytes.end());
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("malformed SQuAD JSON: ") + e.what(), e.byte);
  }

  std::vector<QAInstance> out;
  const auto& data = require(root, "data", "top level");
  for (std::size_t a = 0; a < data.size(); ++a) {
    const std::string a_where = "data[" + std::to_string(a) + "]";
    const auto& paragraphs = require(data[a], "paragraphs", a_where);
    for (std::size_t p = 0; p < paragraphs.size(); ++p) {
      const std::string p_where = a_where + ".paragraphs[" + std::to_string(p) + "]";
      const auto context = require(paragraphs[p], "context", p_where).get<std::string>();
      const auto& qas = require(paragraphs[p], "qas", p_where);
      for (const auto& qa : qas) {
        const std::string qa_id = qa_id_string(qa);
        const std::string where = p_where + " qa " + qa_id;
        if (qa_id.empty()) throw ValidationError("missing qa id at " + p_where);
        const auto& answers = require(qa, "answers", where);
        if (answers.empty()) throw ValidationError("question without answers: " + qa_id);
        const auto& first = answers.front();

        QAInstance inst;
        inst.id = std::to_string(a) + "-" + std::to_string(p) + "-" + qa_id;
        inst.question = require(qa, "question", where).get<std::string>();
        inst.context = context;
        inst.answer_text = require(first, "text", where).get<std::string>();
        const auto stated = require(first, "answer_start", where).get<long long>();
        if (inst.question.empty() || inst.context.empty()) {
          throw ValidationError("empty question or context for qa " + qa_id);
        }
        if (stated < 0) throw ValidationError("negative answer_start for qa " + qa_id);
        const auto located =
            locate_answer(inst.context, inst.answer_text, static_cast<std::size_t>(stated));
        if (!located) {
          throw ValidationError("answer_start does not match answer text for qa " + qa_id);
        }
        inst.answer_start = *located;
        out.push_back(std::move(inst));
      }
    }
  }
  return Dataset(std::move(out));
}

Dataset load_squad(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LookupError("cannot open dataset " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_squad(ss.str());
}

std::string to_squad_json(const Dataset& d) {
  json paragraphs = json::array();
  const std::string* current = nullptr;
  for (const auto& inst : d) {
    if (current == nullptr || *current != inst.context) {
      paragraphs.push_back({{"context", inst.context}, {"qas", json::array()}});
      current = &inst.context;
    }
    paragraphs.back()["qas"].push_back(
        {{"id", inst.id},
         {"question", inst.question},
         {"answers", json::array({{{"text", inst.answer_text},
                                   {"answer_start", inst.answer_start}}})}});
  }
  json root = {{"version", "1.1"},
               {"data", json::array({{{"title", "dump"}, {"paragraphs", paragraphs}}})}};
  return root.dump();
}

Dataset subset_one_per_context(const Dataset& d) {
  std::unordered_set<std::string_view> seen;
  std::vector<QAInstance> kept;
  for (const auto& inst : d) {
    if (seen.insert(inst.context).second) kept.push_back(inst);
  }
  return Dataset(std::move(kept));
}

GoldAnswer oracle_label(std::string_view id, const Dataset& d) {
  const auto& inst = d.at(id);
  return {inst.answer_text, inst.answer_start};
}

std::string escape_field(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '\\': out += "\\\\"; break;
      case '\t': out += "\\t"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      default: out += c;
    }
  }
  return out;
}

std::string unescape_field(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] != '\\') {
      out += s[i];
      continue;
    }
    if (i + 1 == s.size()) throw ParseError("dangling escape in dump field", i);
    switch (s[++i]) {
      case '\\': out += '\\'; break;
      case 't': out += '\t'; break;
      case 'n': out += '\n'; break;
      case 'r': out += '\r'; break;
      default: throw ParseError("unknown escape in dump field", i);
    }
  }
  return out;
}

std::string write_dump(const Dataset& d) {
  std::string out;
  for (const auto& inst : d) {
    out += escape_field(inst.id);
    out += '\t';
    out += escape_field(inst.question);
    out += '\t';
    out += escape_field(inst.context);
    out += '\t';
    out += escape_field(inst.answer_text);
    out += '\t';
    out += std::to_string(inst.answer_start);
    out += '\n';
  }
  return out;
}

Dataset read_dump(std::string_view text) {
  std::vector<QAInstance> out;
  std::size_t line_start = 0;
  while (line_start < text.size()) {
    std::size_t line_end = text.find('\n', line_start);
    if (line_end == std::string_view::npos) line_end = text.size();
    const auto line = text.substr(line_start, line_end - line_start);
    if (!line.empty()) {
      std::vector<std::string_view> fields;
      std::size_t b = 0;
      for (std::size_t i = 0; i <= line.size(); ++i) {
        if (i == line.size() || line[i] == '\t') {
          fields.push_back(line.substr(b, i - b));
          b = i + 1;
        }
      }
      if (fields.size() != 5) throw ParseError("dump line must have 5 fields", line_start);
      QAInstance inst;
      inst.id = unescape_field(fields[0]);
      inst.question = unescape_field(fields[1]);
      inst.context = unescape_field(fields[2]);
      inst.answer_text = unescape_field(fields[3]);
      try {
        std::size_t used = 0;
        inst.answer_start = std::stoull(std::string(fields[4]), &used);
        if (used != fields[4].size()) throw std::invalid_argument("trailing characters");
      } catch (const std::exception&) {
        throw ParseError("bad char_start in dump", line_start);
      }
      out.push_back(std::move(inst));
    }
    line_start = line_end + 1;
  }
  return Dataset(std::move(out));
}

}  // namespace alqa
