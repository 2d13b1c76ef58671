#include <algorithm>
#include <map>

#include "dialsel/synth.hpp"
#include "dialsel/taskgen.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace dialsel;

namespace {

Dialogue make_dialogue(const std::string& id, const std::vector<std::string>& texts) {
  Dialogue d;
  d.id = id;
  for (std::size_t i = 0; i < texts.size(); ++i)
    d.utterances.push_back({i + 1, texts[i], {}});
  return d;
}

// Small fixed corpus: distinct letters per dialogue so cross-dialogue
// replacements are always detectable.
std::vector<Dialogue> tiny_corpus() {
  return {
      make_dialogue("d0", {"a1 a2", "a3 a4 a5", "a6", "a7 a8", "a9"}),
      make_dialogue("d1", {"b1", "b2 b3", "b4 b5 b6", "b7"}),
      make_dialogue("d2", {"c1 c2 c3", "c4", "c5 c6", "c7", "c8 c9"}),
      make_dialogue("d3", {"e1 e2", "e3", "e4 e5", "e6 e7 e8"}),
  };
}

Vocab corpus_vocab(const std::vector<Dialogue>& corpus) {
  return build_vocab(corpus, 1, 10000);
}

// Splits a packed two-block sequence into per-utterance id lists:
// block 0 = between [CLS] and the first [SEP], block 1 = rest.
std::vector<std::vector<std::size_t>> block_utterances(const PackedSequence& p,
                                                       int block) {
  std::vector<std::vector<std::size_t>> out;
  std::vector<std::size_t> cur;
  bool in_second = false;
  for (std::size_t i = 1; i < p.size(); ++i) {
    const std::size_t id = p.token_ids[i];
    if (id == Vocab::kSep) {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
      if ((block == 0 && !in_second) || (block == 1 && in_second)) return out;
      in_second = true;
      out.clear();
      continue;
    }
    if (id == Vocab::kEot) {
      out.push_back(cur);
      cur.clear();
      continue;
    }
    if ((block == 0) == !in_second) cur.push_back(id);
  }
  return out;
}

std::vector<std::size_t> utt_ids(const Vocab& v, const Utterance& u) {
  return v.ids_of(tokenize(u.text));
}

}  // namespace

TEST_CASE("gen_crm packs the pair and carries the label") {
  auto corpus = tiny_corpus();
  Vocab v = corpus_vocab(corpus);
  LabeledPair pair;
  pair.context = corpus[0];
  pair.response = {6, "b1 b2", {}};
  pair.label = 0;
  CrmInstance inst = gen_crm(pair, v, 448, 64);
  CHECK(inst.label == 0);
  PackedSequence direct = pack_context_response(pair.context, pair.response, v, 448, 64);
  CHECK(inst.packed.token_ids == direct.token_ids);
}

TEST_CASE("gen_nsp halves reconstruct the source or the donor") {
  auto corpus = tiny_corpus();
  Vocab v = corpus_vocab(corpus);
  const Dialogue& d = corpus[0];
  for (std::uint64_t s = 0; s < 300; ++s) {
    Rng rng(s);
    NspInstance inst = gen_nsp(d, corpus, rng, v, 512);
    REQUIRE(inst.split_point >= 1);
    REQUIRE(inst.split_point < d.turns());
    auto left = block_utterances(inst.packed, 0);
    auto right = block_utterances(inst.packed, 1);

    auto source_half = [&](bool left_half) {
      std::vector<std::vector<std::size_t>> out;
      const std::size_t from = left_half ? 0 : inst.split_point;
      const std::size_t to = left_half ? inst.split_point : d.turns();
      for (std::size_t i = from; i < to; ++i) out.push_back(utt_ids(v, d.utterances[i]));
      return out;
    };

    if (inst.label == 1) {
      CHECK(inst.replaced_side == NspInstance::Side::none);
      CHECK(left == source_half(true));
      CHECK(right == source_half(false));
    } else {
      REQUIRE(inst.replaced_side != NspInstance::Side::none);
      const Dialogue* donor = nullptr;
      for (const Dialogue& cand : corpus)
        if (cand.id == inst.donor_id) donor = &cand;
      REQUIRE(donor != nullptr);
      CHECK(donor->id != d.id);
      if (inst.replaced_side == NspInstance::Side::left) {
        CHECK(right == source_half(false));
        // left must be a prefix of the donor
        REQUIRE(left.size() <= donor->turns());
        for (std::size_t i = 0; i < left.size(); ++i)
          CHECK(left[i] == utt_ids(v, donor->utterances[i]));
      } else {
        CHECK(left == source_half(true));
        REQUIRE(right.size() <= donor->turns());
        for (std::size_t i = 0; i < right.size(); ++i)
          CHECK(right[i] ==
                utt_ids(v, donor->utterances[donor->turns() - right.size() + i]));
      }
    }
  }
  SUBCASE("single-turn dialogues cannot split") {
    Dialogue lone = make_dialogue("x", {"a1"});
    Rng rng(1);
    CHECK_THROWS_AS(gen_nsp(lone, corpus, rng, v, 512), Error);
  }
}

TEST_CASE("gen_ur masks one full utterance and records its tokens") {
  auto corpus = tiny_corpus();
  Vocab v = corpus_vocab(corpus);
  const Dialogue& d = corpus[2];
  for (std::uint64_t s = 0; s < 200; ++s) {
    Rng rng(s);
    UrInstance inst = gen_ur(d, rng, v, 512);
    REQUIRE(inst.masked_turn >= 1);
    REQUIRE(inst.masked_turn <= d.turns());
    REQUIRE(inst.packed.mask_span.has_value());
    auto [ms, me] = *inst.packed.mask_span;
    CHECK(me - ms == inst.target_ids.size());
    CHECK(inst.target_ids == utt_ids(v, d.utterances[inst.masked_turn - 1]));
    for (std::size_t i = ms; i < me; ++i)
      CHECK(inst.packed.token_ids[i] == Vocab::kMask);
  }
}

TEST_CASE("gen_id replaces one utterance with foreign text and a one-hot") {
  auto corpus = tiny_corpus();
  Vocab v = corpus_vocab(corpus);
  const Dialogue& d = corpus[1];
  for (std::uint64_t s = 0; s < 200; ++s) {
    Rng rng(s);
    IdInstance inst = gen_id(d, corpus, rng, v, 512);
    REQUIRE(inst.z.size() == d.turns());
    CHECK(std::count(inst.z.begin(), inst.z.end(), 1) == 1);
    CHECK(inst.z[inst.replaced_turn - 1] == 1);
    REQUIRE(inst.packed.utterance_spans.size() == d.turns());

    const Dialogue* donor = nullptr;
    for (const Dialogue& cand : corpus)
      if (cand.id == inst.donor_id) donor = &cand;
    REQUIRE(donor != nullptr);
    CHECK(inst.replacement_text != d.utterances[inst.replaced_turn - 1].text);
    bool from_donor = false;
    for (const Utterance& u : donor->utterances)
      from_donor = from_donor || u.text == inst.replacement_text;
    CHECK(from_donor);

    // all other utterances intact
    auto utts = block_utterances(inst.packed, 0);
    REQUIRE(utts.size() == d.turns());
    for (std::size_t i = 0; i < d.turns(); ++i) {
      if (i + 1 == inst.replaced_turn)
        CHECK(utts[i] == v.ids_of(tokenize(inst.replacement_text)));
      else
        CHECK(utts[i] == utt_ids(v, d.utterances[i]));
    }
  }
}

TEST_CASE("gen_cd pairs same-speaker turns against a foreign utterance") {
  auto corpus = tiny_corpus();
  Vocab v = corpus_vocab(corpus);
  const Dialogue& d = corpus[0];  // 5 turns: parities {1,3,5} and {2,4}
  std::size_t ascending = 0, descending = 0;
  for (std::uint64_t s = 0; s < 200; ++s) {
    Rng rng(s);
    CdInstance inst = gen_cd(d, corpus, rng, v, 512);
    REQUIRE(inst.turn_i != inst.turn_j);
    (inst.turn_i < inst.turn_j ? ascending : descending) += 1;
    CHECK(inst.turn_i % 2 == inst.turn_j % 2);  // same speaker
    auto pos_left = block_utterances(inst.packed_pos, 0);
    auto pos_right = block_utterances(inst.packed_pos, 1);
    REQUIRE(pos_left.size() == 1);
    REQUIRE(pos_right.size() == 1);
    CHECK(pos_left[0] == utt_ids(v, d.utterances[inst.turn_i - 1]));
    CHECK(pos_right[0] == utt_ids(v, d.utterances[inst.turn_j - 1]));

    auto neg_left = block_utterances(inst.packed_neg, 0);
    auto neg_right = block_utterances(inst.packed_neg, 1);
    REQUIRE(neg_left.size() == 1);
    REQUIRE(neg_right.size() == 1);
    CHECK(neg_left[0] == pos_left[0]);
    const Dialogue* donor = nullptr;
    for (const Dialogue& cand : corpus)
      if (cand.id == inst.donor_id) donor = &cand;
    REQUIRE(donor != nullptr);
    CHECK(donor->id != d.id);
    bool from_donor = false;
    for (const Utterance& u : donor->utterances)
      from_donor = from_donor || utt_ids(v, u) == neg_right[0];
    CHECK(from_donor);
  }
  // the pair is two uniform draws, so both orders must show up
  CHECK(ascending > 0);
  CHECK(descending > 0);
  SUBCASE("two-turn dialogues have no same-speaker pair") {
    Dialogue two = make_dialogue("x", {"a1", "a2"});
    Rng rng(1);
    CHECK_THROWS_AS(gen_cd(two, corpus, rng, v, 512), Error);
  }
}

TEST_CASE("sampling distributions match their declared laws") {
  auto corpus = tiny_corpus();
  Vocab v = corpus_vocab(corpus);
  const Dialogue& d = corpus[0];  // 5 turns
  const std::size_t n = 20000;

  SUBCASE("nsp label is a fair coin") {
    std::vector<std::size_t> counts(2, 0);
    for (std::size_t i = 0; i < n; ++i) {
      Rng rng(mix_seed({99, static_cast<std::uint64_t>(Task::nsp), 0, i}));
      ++counts[static_cast<std::size_t>(gen_nsp(d, corpus, rng, v, 512).label)];
    }
    CHECK(oracles::chi2_uniform_ok(counts));
  }
  SUBCASE("ur masked turn is uniform over turns") {
    std::vector<std::size_t> counts(d.turns(), 0);
    for (std::size_t i = 0; i < n; ++i) {
      Rng rng(mix_seed({7, static_cast<std::uint64_t>(Task::ur), 0, i}));
      ++counts[gen_ur(d, rng, v, 512).masked_turn - 1];
    }
    CHECK(oracles::chi2_uniform_ok(counts));
  }
  SUBCASE("id replaced turn is uniform over turns") {
    std::vector<std::size_t> counts(d.turns(), 0);
    for (std::size_t i = 0; i < n; ++i) {
      Rng rng(mix_seed({13, static_cast<std::uint64_t>(Task::id), 0, i}));
      ++counts[gen_id(d, corpus, rng, v, 512).replaced_turn - 1];
    }
    CHECK(oracles::chi2_uniform_ok(counts));
  }
}

TEST_CASE("parse_task_set understands subsets and rejects unknowns") {
  TaskSet all = parse_task_set("nsp,ur,id,cd");
  CHECK(all.any());
  CHECK((all.nsp && all.ur && all.id && all.cd));
  TaskSet some = parse_task_set("cd,nsp");
  CHECK(some.nsp);
  CHECK(some.cd);
  CHECK(!some.ur);
  CHECK(!some.id);
  CHECK(!parse_task_set("").any());
  CHECK(!parse_task_set("crm").any());  // the main task is always on
  CHECK_THROWS_AS(parse_task_set("nsp,bogus"), ConfigError);
}

TEST_CASE("make_training_batch generates per-pair instances with skips") {
  auto corpus = tiny_corpus();
  Vocab v = corpus_vocab(corpus);
  std::vector<LabeledPair> pairs;
  LabeledPair pos;
  pos.context = corpus[0];
  pos.response = {6, "b1", {}};
  pos.label = 1;
  LabeledPair neg = pos;
  neg.label = 0;
  LabeledPair single;  // single-turn context: every auxiliary task skips
  single.context = make_dialogue("s", {"a1 a2"});
  single.response = {2, "a3", {}};
  single.label = 1;
  pairs = {pos, neg, single};

  PackLimits limits;
  Batch batch = make_training_batch(pairs, corpus, 5, 1, v, parse_task_set("nsp,ur,id,cd"),
                                    limits);
  CHECK(batch.crm.size() == 3);  // every pair
  CHECK(batch.nsp.size() == 1);  // auxiliary tasks: only the multi-turn positive
  CHECK(batch.ur.size() == 1);
  CHECK(batch.id.size() == 1);
  CHECK(batch.cd.size() == 1);
  CHECK(batch.skips.size() == 4);  // all four skipped on the single-turn context

  SUBCASE("disabling one task leaves the others' draws untouched") {
    Batch ablated = make_training_batch(pairs, corpus, 5, 1, v,
                                        parse_task_set("nsp,id,cd"), limits);
    CHECK(ablated.ur.empty());
    REQUIRE(ablated.nsp.size() == batch.nsp.size());
    CHECK(ablated.nsp[0].packed.token_ids == batch.nsp[0].packed.token_ids);
    CHECK(ablated.id[0].packed.token_ids == batch.id[0].packed.token_ids);
    CHECK(ablated.cd[0].packed_neg.token_ids == batch.cd[0].packed_neg.token_ids);
  }
  SUBCASE("same seed and step reproduce the batch exactly") {
    Batch again = make_training_batch(pairs, corpus, 5, 1, v,
                                      parse_task_set("nsp,ur,id,cd"), limits);
    REQUIRE(again.ur.size() == batch.ur.size());
    CHECK(again.ur[0].packed.token_ids == batch.ur[0].packed.token_ids);
    CHECK(again.nsp[0].label == batch.nsp[0].label);
  }
  SUBCASE("a different step redraws") {
    Batch later = make_training_batch(pairs, corpus, 5, 2, v,
                                      parse_task_set("nsp,ur,id,cd"), limits);
    bool any_diff = later.ur[0].masked_turn != batch.ur[0].masked_turn ||
                    later.id[0].replaced_turn != batch.id[0].replaced_turn ||
                    later.nsp[0].label != batch.nsp[0].label;
    CHECK(any_diff);
  }
}
