#include "dialsel/synth.hpp"

#include <algorithm>
#include <string>

namespace dialsel {

namespace {

constexpr std::uint64_t kCorpusStream = 0xc0de;
constexpr std::uint64_t kSplitStream = 0x51e7;

std::string topic_word(std::size_t topic, std::size_t word) {
  return "top" + std::to_string(topic) + "w" + std::to_string(word);
}

}  // namespace

std::vector<Dialogue> synth_dialogues(const SynthConfig& cfg) {
  if (cfg.dialogues == 0) throw ConfigError("synth: dialogues must be >= 1");
  if (cfg.topics == 0 || cfg.topic_words == 0 || cfg.fillers == 0)
    throw ConfigError("synth: topics, topic_words and fillers must be >= 1");
  if (cfg.styles < 2) throw ConfigError("synth: need >= 2 styles");
  if (cfg.min_turns < 2 || cfg.min_turns > cfg.max_turns)
    throw ConfigError("synth: need 2 <= min_turns <= max_turns");
  if (cfg.min_words < 1 || cfg.min_words > cfg.max_words)
    throw ConfigError("synth: need 1 <= min_words <= max_words");

  Rng rng(mix_seed({cfg.seed, kCorpusStream}));
  std::vector<Dialogue> out;
  out.reserve(cfg.dialogues);
  for (std::size_t d = 0; d < cfg.dialogues; ++d) {
    Dialogue dia;
    dia.id = "syn" + std::to_string(d);
    const std::size_t topic = rng.uniform_index(cfg.topics);
    const std::size_t style_a = rng.uniform_index(cfg.styles);
    std::size_t style_b = rng.uniform_index(cfg.styles - 1);
    if (style_b >= style_a) ++style_b;  // distinct speaker styles
    const std::size_t turns =
        cfg.min_turns + rng.uniform_index(cfg.max_turns - cfg.min_turns + 1);
    for (std::size_t t = 1; t <= turns; ++t) {
      Utterance u;
      u.turn_index = t;
      const std::size_t style = t % 2 == 1 ? style_a : style_b;
      u.text = "sty" + std::to_string(style);
      const std::size_t words =
          cfg.min_words + rng.uniform_index(cfg.max_words - cfg.min_words + 1);
      for (std::size_t w = 0; w < words; ++w)
        u.text += " " + topic_word(topic, rng.uniform_index(cfg.topic_words));
      u.text += " fil" + std::to_string(rng.uniform_index(cfg.fillers));
      dia.utterances.push_back(std::move(u));
    }
    out.push_back(std::move(dia));
  }
  return out;
}

namespace {

// Context = a random-length prefix, candidate = the following utterance.
LabeledPair make_pair(const Dialogue& d, std::size_t split, const Utterance& response,
                      int label) {
  LabeledPair p;
  p.context.id = d.id;
  p.context.utterances.assign(d.utterances.begin(),
                              d.utterances.begin() + static_cast<std::ptrdiff_t>(split));
  p.response = response;
  p.response.turn_index = split + 1;
  p.label = label;
  return p;
}

const Utterance& random_foreign_utterance(const std::vector<Dialogue>& pool,
                                          const std::string& exclude_id, Rng& rng) {
  const Dialogue& donor = sample_other_dialogue(pool, exclude_id, rng);
  return donor.utterances[rng.uniform_index(donor.turns())];
}

}  // namespace

SynthSplit synth_split(const std::vector<Dialogue>& corpus, std::size_t train_contexts,
                       std::size_t valid_contexts, std::size_t test_contexts,
                       std::size_t group_size, std::uint64_t seed) {
  if (group_size < 2) throw ConfigError("synth: group_size must be >= 2");
  const std::size_t held_out = valid_contexts + test_contexts;
  if (corpus.size() < held_out + 2)
    throw Error("synth: corpus of " + std::to_string(corpus.size()) +
                " dialogues cannot hold out " + std::to_string(held_out));

  for (const Dialogue& d : corpus)
    if (d.turns() < 3)
      throw Error("synth: dialogue " + d.id +
                  " has fewer than 3 turns; cannot split into context + next turn");

  Rng rng(mix_seed({seed, kSplitStream}));
  SynthSplit split;
  const std::size_t train_count = corpus.size() - held_out;
  split.train_dialogues.assign(corpus.begin(),
                               corpus.begin() + static_cast<std::ptrdiff_t>(train_count));

  for (std::size_t i = 0; i < train_contexts; ++i) {
    const Dialogue& d = split.train_dialogues[rng.uniform_index(train_count)];
    const std::size_t t = 2 + rng.uniform_index(d.turns() - 2);  // context u_1..u_t
    split.train_pairs.push_back(make_pair(d, t, d.utterances[t], 1));
    split.train_pairs.push_back(
        make_pair(d, t, random_foreign_utterance(split.train_dialogues, d.id, rng), 0));
  }

  auto fill_groups = [&](std::vector<LabeledPair>& pairs, std::size_t begin,
                         std::size_t count) {
    for (std::size_t i = 0; i < count; ++i) {
      const Dialogue& d = corpus[begin + i];
      const std::size_t t = 2 + rng.uniform_index(d.turns() - 2);
      const std::size_t pos_slot = rng.uniform_index(group_size);
      for (std::size_t slot = 0; slot < group_size; ++slot) {
        if (slot == pos_slot)
          pairs.push_back(make_pair(d, t, d.utterances[t], 1));
        else
          pairs.push_back(
              make_pair(d, t, random_foreign_utterance(corpus, d.id, rng), 0));
      }
    }
  };
  fill_groups(split.valid_pairs, train_count, valid_contexts);
  fill_groups(split.test_pairs, train_count + valid_contexts, test_contexts);
  return split;
}

}  // namespace dialsel
