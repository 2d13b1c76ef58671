#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dialsel/tokenizer.hpp"

namespace dialsel {

// Task tags used to derive independent RNG substreams. Stable values: they
// feed mix_seed, so reordering them would silently change every sample.
enum class Task : std::uint64_t { crm = 1, nsp = 2, ur = 3, id = 4, cd = 5 };
const char* task_name(Task t);

struct CrmInstance {
  PackedSequence packed;
  int label = 0;
};

// Next-session prediction: split the dialogue at t, with a 50% chance swap
// one side for material from another dialogue.
struct NspInstance {
  enum class Side { none, left, right };
  PackedSequence packed;
  int label = 1;  // 1 iff both pieces come from the source dialogue
  std::size_t split_point = 0;
  Side replaced_side = Side::none;
  std::string donor_id;  // empty when nothing was replaced
};

// Utterance restoration: one turn fully masked; targets are its token ids.
struct UrInstance {
  PackedSequence packed;  // mask_span set
  std::size_t masked_turn = 0;
  std::vector<std::size_t> target_ids;
};

// Incoherence detection: one turn replaced by a foreign utterance.
struct IdInstance {
  PackedSequence packed;  // context-only packing, spans per utterance
  std::vector<int> z;     // one-hot over turns, z[k-1] = 1
  std::size_t replaced_turn = 0;
  std::string donor_id;
  std::string replacement_text;
};

// Consistency discrimination: same-speaker pair vs cross-dialogue pair.
struct CdInstance {
  PackedSequence packed_pos;  // <u, v>, same dialogue, same parity
  PackedSequence packed_neg;  // <u, v~>, v~ from another dialogue
  std::size_t turn_i = 0;
  std::size_t turn_j = 0;
  std::string donor_id;
};

CrmInstance gen_crm(const LabeledPair& pair, const Vocab& vocab,
                    std::size_t max_ctx = 448, std::size_t max_resp = 64);
NspInstance gen_nsp(const Dialogue& dialogue, const std::vector<Dialogue>& corpus,
                    Rng& rng, const Vocab& vocab, std::size_t max_len = 512);
UrInstance gen_ur(const Dialogue& dialogue, Rng& rng, const Vocab& vocab,
                  std::size_t max_len = 512);
IdInstance gen_id(const Dialogue& dialogue, const std::vector<Dialogue>& corpus,
                  Rng& rng, const Vocab& vocab, std::size_t max_len = 512);
CdInstance gen_cd(const Dialogue& dialogue, const std::vector<Dialogue>& corpus,
                  Rng& rng, const Vocab& vocab, std::size_t max_len = 512);

struct TaskSet {
  bool nsp = true;
  bool ur = true;
  bool id = true;
  bool cd = true;

  bool any() const { return nsp || ur || id || cd; }
};

// "nsp,ur,id,cd" (any subset, any order; "crm" accepted and ignored since the
// main task is always on). Unknown name -> ConfigError.
TaskSet parse_task_set(const std::string& csv);

struct SkipRecord {
  std::size_t pair_index = 0;
  Task task = Task::crm;
  std::string reason;
};

struct Batch {
  std::vector<CrmInstance> crm;
  std::vector<NspInstance> nsp;
  std::vector<UrInstance> ur;
  std::vector<IdInstance> id;
  std::vector<CdInstance> cd;
  std::vector<SkipRecord> skips;

  std::size_t instance_count() const {
    return crm.size() + nsp.size() + ur.size() + id.size() + cd.size();
  }
};

// One main-task instance per pair; for each positive pair's context, one
// instance per enabled auxiliary task, skipping tasks whose preconditions
// the context cannot meet. Each (task, pair) combination draws from its own
// substream of mix_seed(seed, task, step, pair index), so disabling one task
// leaves every other task's randomness untouched.
Batch make_training_batch(std::span<const LabeledPair> pairs,
                          const std::vector<Dialogue>& corpus, std::uint64_t seed,
                          std::uint64_t step, const Vocab& vocab,
                          const TaskSet& tasks, const PackLimits& limits);

}  // namespace dialsel
