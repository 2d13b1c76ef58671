#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "dialsel/rng.hpp"

namespace dialsel {

enum class Speaker { A, B };

struct Utterance {
  std::size_t turn_index = 1;  // 1-based position in the dialogue
  std::string text;
  std::vector<std::string> tokens;  // filled on demand by the tokenizer

  // Speakers strictly alternate; A opens every dialogue.
  Speaker speaker() const { return turn_index % 2 == 1 ? Speaker::A : Speaker::B; }
};

struct Dialogue {
  std::string id;
  std::vector<Utterance> utterances;
  std::size_t turns() const { return utterances.size(); }
};

struct LabeledPair {
  Dialogue context;
  Utterance response;  // turn_index = context turns + 1
  int label = 0;       // 1 iff the response actually follows the context
};

struct CorpusStats {
  std::size_t dialogue_count = 0;
  std::map<std::size_t, std::size_t> turn_histogram;    // turns -> dialogues
  std::map<std::size_t, std::size_t> token_histogram;   // total tokens -> dialogues
  std::size_t positive_pairs = 0;
  std::size_t negative_pairs = 0;
};

// One pair per line: `label<TAB>context<TAB>response`, context utterances
// separated by `__eot__`, whitespace around each utterance trimmed.
std::vector<LabeledPair> load_pairs_tsv(const std::string& path);
std::string serialize_pairs_tsv(const std::vector<LabeledPair>& pairs);

// One JSON object per line: {"id": str, "utterances": [str, ...]}.
std::vector<Dialogue> load_dialogues_jsonl(const std::string& path);
std::string serialize_dialogues_jsonl(const std::vector<Dialogue>& dialogues);

// Exact counts; pairs contribute the label tallies when given.
CorpusStats corpus_stats(const std::vector<Dialogue>& dialogues,
                         const std::vector<LabeledPair>* pairs = nullptr);
std::string stats_to_json(const CorpusStats& stats);

// Uniform over dialogues whose id differs from exclude_id.
const Dialogue& sample_other_dialogue(const std::vector<Dialogue>& corpus,
                                      const std::string& exclude_id, Rng& rng);

}  // namespace dialsel
