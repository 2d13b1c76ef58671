#pragma once

#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "dialsel/corpus.hpp"

namespace dialsel {

// Token -> id table. Ids 0..4 are reserved for structural tokens, 5 for
// out-of-vocabulary words; real tokens start at 6.
class Vocab {
 public:
  static constexpr std::size_t kPad = 0;
  static constexpr std::size_t kCls = 1;
  static constexpr std::size_t kSep = 2;
  static constexpr std::size_t kEot = 3;
  static constexpr std::size_t kMask = 4;
  static constexpr std::size_t kUnk = 5;
  static constexpr std::size_t kReservedCount = 6;

  Vocab();

  std::size_t size() const { return id_to_token_.size(); }
  std::size_t id_of(const std::string& token) const;  // kUnk when absent
  const std::string& token_of(std::size_t id) const;
  std::vector<std::size_t> ids_of(const std::vector<std::string>& tokens) const;

  void add(const std::string& token);  // appends with the next free id

 private:
  std::vector<std::string> id_to_token_;
  std::unordered_map<std::string, std::size_t> token_to_id_;
};

// Lowercases, splits on whitespace, and detaches ASCII punctuation as
// single-character tokens. Bytes >= 0x80 pass through untouched.
std::vector<std::string> tokenize(const std::string& text);

// Tokens with frequency >= min_freq, ranked by (freq desc, token asc),
// truncated so the total vocabulary (reserved included) stays <= max_size.
Vocab build_vocab(const std::vector<Dialogue>& corpus, std::size_t min_freq,
                  std::size_t max_size);
Vocab build_vocab(const std::vector<Dialogue>& corpus,
                  const std::vector<LabeledPair>& pairs, std::size_t min_freq,
                  std::size_t max_size);

// One token per line, line number = id.
void save_vocab(const std::string& path, const Vocab& vocab);
Vocab load_vocab(const std::string& path);

struct PackedSequence {
  std::vector<std::size_t> token_ids;
  std::vector<std::size_t> segment_ids;  // 0 through the first [SEP], then 1
  std::vector<std::size_t> positions;    // 0..L-1
  // Per-utterance [start,end) content ranges over token_ids; special tokens
  // excluded. Utterances fully removed by truncation have no span.
  std::vector<std::pair<std::size_t, std::size_t>> utterance_spans;
  std::optional<std::pair<std::size_t, std::size_t>> mask_span;  // [MASK] run

  std::size_t size() const { return token_ids.size(); }
};

struct PackLimits {
  std::size_t max_ctx = 448;
  std::size_t max_resp = 64;
  std::size_t max_len = 512;  // single-budget packers
};

// [CLS] u_1 [EOT] ... u_m [EOT] [SEP] r [SEP]. The context block (with its
// specials) fits max_ctx by removing the earliest tokens; the response block
// fits max_resp by keeping the head.
PackedSequence pack_context_response(const Dialogue& context, const Utterance& response,
                                     const Vocab& vocab, std::size_t max_ctx = 448,
                                     std::size_t max_resp = 64);

// [CLS] u_1 [EOT] ... u_m [EOT] [SEP], segment 0 throughout. Used by the
// restoration and incoherence tasks, which have no second block.
PackedSequence pack_context(const Dialogue& context, const Vocab& vocab,
                            std::size_t max_len = 512);

// [CLS] left utterances-with-[EOT] [SEP] right utterances-with-[EOT] [SEP].
// Left keeps its tail, right keeps its head.
PackedSequence pack_session_pair(const std::vector<Utterance>& left,
                                 const std::vector<Utterance>& right,
                                 const Vocab& vocab, std::size_t max_len = 512);

// pack_context with utterance masked_turn replaced by [MASK] tokens of the
// same length; mask_span covers the run.
PackedSequence pack_masked_context(const Dialogue& context, std::size_t masked_turn,
                                   const Vocab& vocab, std::size_t max_len = 512);

// [CLS] u [SEP] v [SEP]. u keeps its tail, v keeps its head.
PackedSequence pack_utterance_pair(const Utterance& u, const Utterance& v,
                                   const Vocab& vocab, std::size_t max_len = 512);

}  // namespace dialsel
