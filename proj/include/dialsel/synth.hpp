#pragma once

#include <cstdint>
#include <vector>

#include "dialsel/corpus.hpp"

namespace dialsel {

// Synthetic dialogue generator with planted structure. Every dialogue gets a
// topic (its utterances draw from that topic's word pool) and one style
// token per speaker that opens each of their turns, so next-utterance
// identity, speaker consistency, and topical coherence are all learnable.
struct SynthConfig {
  std::size_t dialogues = 2000;
  std::size_t topics = 20;
  std::size_t topic_words = 30;  // pool size per topic
  std::size_t styles = 12;
  std::size_t fillers = 40;
  std::size_t min_turns = 4;
  std::size_t max_turns = 8;
  std::size_t min_words = 2;  // topic words per utterance
  std::size_t max_words = 4;
  std::uint64_t seed = 0;
};

std::vector<Dialogue> synth_dialogues(const SynthConfig& cfg);

// Labeled pairs and ranking groups carved out of a synthetic corpus. The
// last valid_contexts + test_contexts dialogues are held out; training
// pairs come 1:1 positive:negative from the rest. Held-out groups are
// group_size consecutive pairs sharing one context, exactly one positive at
// a random slot.
struct SynthSplit {
  std::vector<Dialogue> train_dialogues;
  std::vector<LabeledPair> train_pairs;
  std::vector<LabeledPair> valid_pairs;
  std::vector<LabeledPair> test_pairs;
};

SynthSplit synth_split(const std::vector<Dialogue>& corpus, std::size_t train_contexts,
                       std::size_t valid_contexts, std::size_t test_contexts,
                       std::size_t group_size, std::uint64_t seed);

}  // namespace dialsel
