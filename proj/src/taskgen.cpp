#include "dialsel/taskgen.hpp"

#include <sstream>

namespace dialsel {

const char* task_name(Task t) {
  switch (t) {
    case Task::crm: return "crm";
    case Task::nsp: return "nsp";
    case Task::ur: return "ur";
    case Task::id: return "id";
    case Task::cd: return "cd";
  }
  return "?";
}

CrmInstance gen_crm(const LabeledPair& pair, const Vocab& vocab, std::size_t max_ctx,
                    std::size_t max_resp) {
  CrmInstance inst;
  inst.packed = pack_context_response(pair.context, pair.response, vocab, max_ctx,
                                      max_resp);
  inst.label = pair.label;
  return inst;
}

namespace {

std::vector<Utterance> slice_utterances(const Dialogue& d, std::size_t first,
                                        std::size_t last) {
  return {d.utterances.begin() + static_cast<std::ptrdiff_t>(first),
          d.utterances.begin() + static_cast<std::ptrdiff_t>(last)};
}

}  // namespace

NspInstance gen_nsp(const Dialogue& dialogue, const std::vector<Dialogue>& corpus,
                    Rng& rng, const Vocab& vocab, std::size_t max_len) {
  const std::size_t m = dialogue.turns();
  if (m < 2) throw Error("gen_nsp: dialogue too short to split");
  NspInstance inst;
  inst.split_point = 1 + rng.uniform_index(m - 1);  // uniform over 1..m-1
  std::vector<Utterance> left = slice_utterances(dialogue, 0, inst.split_point);
  std::vector<Utterance> right = slice_utterances(dialogue, inst.split_point, m);

  if (rng.coin()) {
    inst.label = 1;
  } else {
    inst.label = 0;
    const bool replace_left = rng.coin();
    if (replace_left) {
      // Foreign left piece: a donor prefix of uniform random length >= 1.
      const Dialogue& donor = sample_other_dialogue(corpus, dialogue.id, rng);
      const std::size_t len = 1 + rng.uniform_index(donor.turns());
      left = slice_utterances(donor, 0, len);
      inst.replaced_side = NspInstance::Side::left;
      inst.donor_id = donor.id;
    } else {
      // Foreign right piece: a donor suffix starting at a uniform split,
      // which needs a donor of at least two turns.
      const Dialogue* donor = nullptr;
      for (int tries = 0; tries < 100; ++tries) {
        const Dialogue& cand = sample_other_dialogue(corpus, dialogue.id, rng);
        if (cand.turns() >= 2) {
          donor = &cand;
          break;
        }
      }
      if (donor == nullptr)
        throw Error("gen_nsp: no donor with >= 2 turns after 100 tries");
      const std::size_t split = 1 + rng.uniform_index(donor->turns() - 1);
      right = slice_utterances(*donor, split, donor->turns());
      inst.replaced_side = NspInstance::Side::right;
      inst.donor_id = donor->id;
    }
  }
  inst.packed = pack_session_pair(left, right, vocab, max_len);
  return inst;
}

UrInstance gen_ur(const Dialogue& dialogue, Rng& rng, const Vocab& vocab,
                  std::size_t max_len) {
  const std::size_t m = dialogue.turns();
  if (m < 2) throw Error("gen_ur: dialogue too short to restore from");
  UrInstance inst;
  inst.masked_turn = 1 + rng.uniform_index(m);  // uniform over 1..m
  inst.packed = pack_masked_context(dialogue, inst.masked_turn, vocab, max_len);
  const Utterance& target = dialogue.utterances[inst.masked_turn - 1];
  inst.target_ids = vocab.ids_of(
      target.tokens.empty() ? tokenize(target.text) : target.tokens);
  return inst;
}

IdInstance gen_id(const Dialogue& dialogue, const std::vector<Dialogue>& corpus,
                  Rng& rng, const Vocab& vocab, std::size_t max_len) {
  const std::size_t m = dialogue.turns();
  if (m < 2) throw Error("gen_id: dialogue too short to edit");
  IdInstance inst;
  inst.replaced_turn = 1 + rng.uniform_index(m);
  const std::string& original = dialogue.utterances[inst.replaced_turn - 1].text;

  const Utterance* replacement = nullptr;
  for (int tries = 0; tries < 100 && replacement == nullptr; ++tries) {
    const Dialogue& donor = sample_other_dialogue(corpus, dialogue.id, rng);
    const Utterance& cand = donor.utterances[rng.uniform_index(donor.turns())];
    if (cand.text != original) {
      replacement = &cand;
      inst.donor_id = donor.id;
    }
  }
  if (replacement == nullptr)
    throw Error("gen_id: degenerate corpus, no differing replacement in 100 tries");

  Dialogue edited = dialogue;
  Utterance& slot = edited.utterances[inst.replaced_turn - 1];
  slot.text = replacement->text;
  slot.tokens.clear();
  inst.replacement_text = replacement->text;
  inst.packed = pack_context(edited, vocab, max_len);
  if (inst.packed.utterance_spans.size() != m)
    throw Error("gen_id: context truncated below " + std::to_string(m) +
                " utterances; raise max_len");
  inst.z.assign(m, 0);
  inst.z[inst.replaced_turn - 1] = 1;
  return inst;
}

CdInstance gen_cd(const Dialogue& dialogue, const std::vector<Dialogue>& corpus,
                  Rng& rng, const Vocab& vocab, std::size_t max_len) {
  // Same-speaker utterances share turn parity: A speaks odd turns, B even.
  std::vector<std::size_t> classes[2];
  for (std::size_t i = 0; i < dialogue.turns(); ++i)
    classes[(i + 1) % 2 == 1 ? 0 : 1].push_back(i);
  std::vector<const std::vector<std::size_t>*> eligible;
  for (const auto& cls : classes)
    if (cls.size() >= 2) eligible.push_back(&cls);
  if (eligible.empty()) throw Error("gen_cd: no same-speaker pair available");

  const std::vector<std::size_t>& cls =
      *eligible[eligible.size() == 1 ? 0 : rng.uniform_index(eligible.size())];
  const std::size_t a = rng.uniform_index(cls.size());
  std::size_t b = rng.uniform_index(cls.size() - 1);
  if (b >= a) ++b;

  CdInstance inst;
  inst.turn_i = cls[a] + 1;
  inst.turn_j = cls[b] + 1;
  const Utterance& u = dialogue.utterances[cls[a]];
  const Utterance& v = dialogue.utterances[cls[b]];
  const Dialogue& donor = sample_other_dialogue(corpus, dialogue.id, rng);
  const Utterance& foreign = donor.utterances[rng.uniform_index(donor.turns())];
  inst.donor_id = donor.id;
  inst.packed_pos = pack_utterance_pair(u, v, vocab, max_len);
  inst.packed_neg = pack_utterance_pair(u, foreign, vocab, max_len);
  return inst;
}

TaskSet parse_task_set(const std::string& csv) {
  TaskSet set{false, false, false, false};
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    if (item == "nsp") set.nsp = true;
    else if (item == "ur") set.ur = true;
    else if (item == "id") set.id = true;
    else if (item == "cd") set.cd = true;
    else if (item != "crm")
      throw ConfigError("unknown task '" + item + "' (expected nsp,ur,id,cd)");
  }
  return set;
}

Batch make_training_batch(std::span<const LabeledPair> pairs,
                          const std::vector<Dialogue>& corpus, std::uint64_t seed,
                          std::uint64_t step, const Vocab& vocab,
                          const TaskSet& tasks, const PackLimits& limits) {
  Batch batch;
  auto substream = [&](Task t, std::size_t pair_index) {
    return Rng(mix_seed({seed, static_cast<std::uint64_t>(t), step, pair_index}));
  };
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const LabeledPair& pair = pairs[i];
    batch.crm.push_back(gen_crm(pair, vocab, limits.max_ctx, limits.max_resp));
    if (pair.label != 1) continue;

    const Dialogue& ctx = pair.context;
    const std::size_t m = ctx.turns();
    const bool have_donors = corpus.size() >= 2;
    if (tasks.nsp) {
      if (m < 2)
        batch.skips.push_back({i, Task::nsp, "context has a single turn"});
      else if (!have_donors)
        batch.skips.push_back({i, Task::nsp, "no donor dialogue"});
      else {
        Rng rng = substream(Task::nsp, i);
        batch.nsp.push_back(gen_nsp(ctx, corpus, rng, vocab, limits.max_len));
      }
    }
    if (tasks.ur) {
      if (m < 2)
        batch.skips.push_back({i, Task::ur, "context has a single turn"});
      else {
        Rng rng = substream(Task::ur, i);
        batch.ur.push_back(gen_ur(ctx, rng, vocab, limits.max_len));
      }
    }
    if (tasks.id) {
      if (m < 2)
        batch.skips.push_back({i, Task::id, "context has a single turn"});
      else if (!have_donors)
        batch.skips.push_back({i, Task::id, "no donor dialogue"});
      else {
        Rng rng = substream(Task::id, i);
        batch.id.push_back(gen_id(ctx, corpus, rng, vocab, limits.max_len));
      }
    }
    if (tasks.cd) {
      if (m < 3)
        batch.skips.push_back({i, Task::cd, "no same-speaker pair"});
      else if (!have_donors)
        batch.skips.push_back({i, Task::cd, "no donor dialogue"});
      else {
        Rng rng = substream(Task::cd, i);
        batch.cd.push_back(gen_cd(ctx, corpus, rng, vocab, limits.max_len));
      }
    }
  }
  return batch;
}

}  // namespace dialsel
