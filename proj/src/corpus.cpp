#include "dialsel/corpus.hpp"

#include <fstream>
#include <sstream>

#include "dialsel/tokenizer.hpp"
#include "json.hpp"

namespace dialsel {

namespace {

constexpr const char* kUttDelim = "__eot__";

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_on(const std::string& s, const std::string& delim) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  for (;;) {
    std::size_t hit = s.find(delim, pos);
    if (hit == std::string::npos) {
      out.push_back(s.substr(pos));
      return out;
    }
    out.push_back(s.substr(pos, hit - pos));
    pos = hit + delim.size();
  }
}

Dialogue make_context(const std::string& id, const std::vector<std::string>& texts) {
  Dialogue d;
  d.id = id;
  d.utterances.reserve(texts.size());
  for (std::size_t i = 0; i < texts.size(); ++i)
    d.utterances.push_back(Utterance{i + 1, texts[i], {}});
  return d;
}

}  // namespace

std::vector<LabeledPair> load_pairs_tsv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error(path + ": cannot open");
  std::vector<LabeledPair> pairs;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> fields = split_on(line, "\t");
    if (fields.size() != 3)
      throw LoadError(path, lineno,
                      "expected 3 tab-separated fields, got " +
                          std::to_string(fields.size()));
    if (fields[0] != "0" && fields[0] != "1")
      throw LoadError(path, lineno, "invalid label '" + fields[0] + "'");
    std::vector<std::string> utts;
    for (const std::string& raw : split_on(fields[1], kUttDelim)) {
      std::string t = trim(raw);
      if (t.empty()) throw LoadError(path, lineno, "empty utterance in context");
      utts.push_back(std::move(t));
    }
    const std::string resp = trim(fields[2]);
    if (resp.empty()) throw LoadError(path, lineno, "empty response");
    LabeledPair p;
    p.context = make_context("p" + std::to_string(lineno), utts);
    p.response = Utterance{utts.size() + 1, resp, {}};
    p.label = fields[0] == "1" ? 1 : 0;
    pairs.push_back(std::move(p));
  }
  return pairs;
}

std::string serialize_pairs_tsv(const std::vector<LabeledPair>& pairs) {
  std::ostringstream os;
  for (const LabeledPair& p : pairs) {
    os << p.label << '\t';
    for (std::size_t i = 0; i < p.context.utterances.size(); ++i) {
      if (i) os << kUttDelim;
      os << p.context.utterances[i].text;
    }
    os << '\t' << p.response.text << '\n';
  }
  return os.str();
}

std::vector<Dialogue> load_dialogues_jsonl(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error(path + ": cannot open");
  std::vector<Dialogue> dialogues;
  std::map<std::string, std::size_t> seen;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded()) throw LoadError(path, lineno, "invalid JSON");
    if (!j.is_object() || !j.contains("id") || !j["id"].is_string() ||
        !j.contains("utterances") || !j["utterances"].is_array())
      throw LoadError(path, lineno, "expected {\"id\": str, \"utterances\": [str,...]}");
    Dialogue d;
    d.id = j["id"].get<std::string>();
    if (d.id.empty()) throw LoadError(path, lineno, "empty dialogue id");
    if (auto [it, fresh] = seen.emplace(d.id, lineno); !fresh)
      throw LoadError(path, lineno,
                      "duplicate dialogue id '" + d.id + "' (first at line " +
                          std::to_string(it->second) + ")");
    if (j["utterances"].empty()) throw LoadError(path, lineno, "empty dialogue");
    for (const auto& u : j["utterances"]) {
      if (!u.is_string()) throw LoadError(path, lineno, "utterance is not a string");
      std::string t = trim(u.get<std::string>());
      if (t.empty()) throw LoadError(path, lineno, "empty utterance");
      d.utterances.push_back(Utterance{d.utterances.size() + 1, std::move(t), {}});
    }
    dialogues.push_back(std::move(d));
  }
  return dialogues;
}

std::string serialize_dialogues_jsonl(const std::vector<Dialogue>& dialogues) {
  std::ostringstream os;
  for (const Dialogue& d : dialogues) {
    nlohmann::json j;
    j["id"] = d.id;
    auto& arr = j["utterances"] = nlohmann::json::array();
    for (const Utterance& u : d.utterances) arr.push_back(u.text);
    os << j.dump() << '\n';
  }
  return os.str();
}

CorpusStats corpus_stats(const std::vector<Dialogue>& dialogues,
                         const std::vector<LabeledPair>* pairs) {
  if (dialogues.empty() && (pairs == nullptr || pairs->empty()))
    throw Error("corpus_stats: empty corpus");
  CorpusStats s;
  s.dialogue_count = dialogues.size();
  for (const Dialogue& d : dialogues) {
    s.turn_histogram[d.turns()] += 1;
    std::size_t tokens = 0;
    for (const Utterance& u : d.utterances) tokens += tokenize(u.text).size();
    s.token_histogram[tokens] += 1;
  }
  if (pairs != nullptr)
    for (const LabeledPair& p : *pairs)
      (p.label == 1 ? s.positive_pairs : s.negative_pairs) += 1;
  return s;
}

std::string stats_to_json(const CorpusStats& stats) {
  nlohmann::json j;
  j["dialogue_count"] = stats.dialogue_count;
  auto& th = j["turn_histogram"] = nlohmann::json::object();
  for (const auto& [turns, count] : stats.turn_histogram)
    th[std::to_string(turns)] = count;
  auto& kh = j["token_histogram"] = nlohmann::json::object();
  for (const auto& [tokens, count] : stats.token_histogram)
    kh[std::to_string(tokens)] = count;
  j["positive_pairs"] = stats.positive_pairs;
  j["negative_pairs"] = stats.negative_pairs;
  return j.dump(2);
}

const Dialogue& sample_other_dialogue(const std::vector<Dialogue>& corpus,
                                      const std::string& exclude_id, Rng& rng) {
  if (corpus.size() < 2) throw Error("sample_other_dialogue: no replacement source");
  for (;;) {
    const Dialogue& d = corpus[rng.uniform_index(corpus.size())];
    if (d.id != exclude_id) return d;
  }
}

}  // namespace dialsel
