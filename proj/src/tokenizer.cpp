#include "dialsel/tokenizer.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>

namespace dialsel {

namespace {

const char* const kReservedTokens[Vocab::kReservedCount] = {
    "[PAD]", "[CLS]", "[SEP]", "[EOT]", "[MASK]", "[UNK]"};

}  // namespace

Vocab::Vocab() {
  for (const char* t : kReservedTokens) add(t);
}

void Vocab::add(const std::string& token) {
  auto [it, fresh] = token_to_id_.emplace(token, id_to_token_.size());
  if (!fresh) throw Error("vocab: duplicate token '" + token + "'");
  id_to_token_.push_back(token);
}

std::size_t Vocab::id_of(const std::string& token) const {
  auto it = token_to_id_.find(token);
  return it == token_to_id_.end() ? kUnk : it->second;
}

const std::string& Vocab::token_of(std::size_t id) const {
  if (id >= id_to_token_.size())
    throw Error("vocab: id " + std::to_string(id) + " out of range");
  return id_to_token_[id];
}

std::vector<std::size_t> Vocab::ids_of(const std::vector<std::string>& tokens) const {
  std::vector<std::size_t> ids;
  ids.reserve(tokens.size());
  for (const std::string& t : tokens) ids.push_back(id_of(t));
  return ids;
}

std::vector<std::string> tokenize(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  auto flush = [&] {
    if (!cur.empty()) {
      out.push_back(cur);
      cur.clear();
    }
  };
  for (char raw : text) {
    const unsigned char c = static_cast<unsigned char>(raw);
    if (c < 0x80 && std::isspace(c)) {
      flush();
    } else if (c < 0x80 && std::ispunct(c)) {
      flush();
      out.push_back(std::string(1, raw));
    } else {
      cur.push_back(c < 0x80 ? static_cast<char>(std::tolower(c)) : raw);
    }
  }
  flush();
  return out;
}

namespace {

void count_tokens(const std::string& text, std::map<std::string, std::size_t>& freq) {
  for (std::string& t : tokenize(text)) freq[std::move(t)] += 1;
}

Vocab vocab_from_freq(const std::map<std::string, std::size_t>& freq,
                      std::size_t min_freq, std::size_t max_size) {
  std::vector<std::pair<std::string, std::size_t>> ranked;
  for (const auto& [token, count] : freq)
    if (count >= min_freq) ranked.emplace_back(token, count);
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  Vocab v;
  const std::size_t keep =
      max_size > Vocab::kReservedCount ? max_size - Vocab::kReservedCount : 0;
  if (ranked.size() > keep) ranked.resize(keep);
  for (const auto& [token, count] : ranked) v.add(token);
  return v;
}

}  // namespace

Vocab build_vocab(const std::vector<Dialogue>& corpus, std::size_t min_freq,
                  std::size_t max_size) {
  return build_vocab(corpus, {}, min_freq, max_size);
}

Vocab build_vocab(const std::vector<Dialogue>& corpus,
                  const std::vector<LabeledPair>& pairs, std::size_t min_freq,
                  std::size_t max_size) {
  if (corpus.empty() && pairs.empty()) throw Error("build_vocab: empty corpus");
  if (min_freq < 1) throw ConfigError("build_vocab: min_freq must be >= 1");
  if (max_size < Vocab::kReservedCount)
    throw ConfigError("build_vocab: max_size below the " +
                std::to_string(Vocab::kReservedCount) + " reserved tokens");
  std::map<std::string, std::size_t> freq;
  for (const Dialogue& d : corpus)
    for (const Utterance& u : d.utterances) count_tokens(u.text, freq);
  for (const LabeledPair& p : pairs) {
    for (const Utterance& u : p.context.utterances) count_tokens(u.text, freq);
    count_tokens(p.response.text, freq);
  }
  return vocab_from_freq(freq, min_freq, max_size);
}

void save_vocab(const std::string& path, const Vocab& vocab) {
  std::ofstream os(path);
  if (!os) throw Error(path + ": cannot open for writing");
  for (std::size_t id = 0; id < vocab.size(); ++id) os << vocab.token_of(id) << '\n';
  if (!os) throw Error(path + ": write failed");
}

Vocab load_vocab(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error(path + ": cannot open");
  Vocab v;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (lineno <= Vocab::kReservedCount) {
      if (line != kReservedTokens[lineno - 1])
        throw LoadError(path, lineno,
                        "expected reserved token '" +
                            std::string(kReservedTokens[lineno - 1]) + "', got '" +
                            line + "'");
      continue;
    }
    if (line.empty()) throw LoadError(path, lineno, "empty vocab entry");
    v.add(line);
  }
  if (lineno < Vocab::kReservedCount)
    throw LoadError(path, lineno, "vocab file missing reserved tokens");
  return v;
}

namespace {

// One flattened packing unit: a content token or an utterance's [EOT].
struct Item {
  std::size_t id;
  std::size_t utt;  // index into the caller's utterance numbering
  bool eot;
};

void append_utterance_items(const Utterance& u, std::size_t utt_index, bool with_eot,
                            const Vocab& vocab, std::vector<Item>& items) {
  const std::vector<std::string> tokens =
      u.tokens.empty() ? tokenize(u.text) : u.tokens;
  if (tokens.empty()) throw Error("packing: empty utterance at turn " +
                                  std::to_string(u.turn_index));
  for (const std::string& t : tokens) items.push_back({vocab.id_of(t), utt_index, false});
  if (with_eot) items.push_back({Vocab::kEot, utt_index, true});
}

// Front truncation for context-like blocks: drop the earliest items until the
// block (items + `specials` structural ids) fits, then drop any [EOT] left
// dangling at the front because its utterance is gone.
void truncate_front(std::vector<Item>& items, std::size_t budget, std::size_t specials) {
  if (budget < specials + 1) throw Error("packing: budget too small to keep any token");
  if (items.size() + specials <= budget) return;
  std::size_t drop = items.size() + specials - budget;
  while (drop < items.size() && items[drop].eot) ++drop;
  items.erase(items.begin(), items.begin() + static_cast<std::ptrdiff_t>(drop));
}

// Back truncation for response-like blocks: keep the head.
void truncate_back(std::vector<Item>& items, std::size_t budget, std::size_t specials) {
  if (budget < specials + 1) throw Error("packing: budget too small to keep any token");
  if (items.size() + specials <= budget) return;
  items.resize(budget - specials);
}

// Assembles [CLS] left [SEP] (right [SEP]) with segments, positions, spans.
PackedSequence assemble(const std::vector<Item>& left, const std::vector<Item>* right) {
  PackedSequence p;
  auto push = [&p](std::size_t id, std::size_t segment) {
    p.token_ids.push_back(id);
    p.segment_ids.push_back(segment);
  };
  push(Vocab::kCls, 0);
  std::size_t span_utt = static_cast<std::size_t>(-1);
  auto emit_items = [&](const std::vector<Item>& items, std::size_t segment) {
    for (const Item& it : items) {
      if (it.eot) {
        push(it.id, segment);
        continue;
      }
      const std::size_t at = p.token_ids.size();
      if (it.utt != span_utt) {
        p.utterance_spans.emplace_back(at, at + 1);
        span_utt = it.utt;
      } else {
        p.utterance_spans.back().second = at + 1;
      }
      push(it.id, segment);
    }
  };
  emit_items(left, 0);
  push(Vocab::kSep, 0);
  if (right != nullptr) {
    emit_items(*right, 1);
    push(Vocab::kSep, 1);
  }
  p.positions.resize(p.token_ids.size());
  for (std::size_t i = 0; i < p.positions.size(); ++i) p.positions[i] = i;
  return p;
}

std::vector<Item> context_items(const std::vector<Utterance>& utterances,
                                const Vocab& vocab, std::size_t first_index) {
  std::vector<Item> items;
  for (std::size_t i = 0; i < utterances.size(); ++i)
    append_utterance_items(utterances[i], first_index + i, /*with_eot=*/true, vocab,
                           items);
  return items;
}

}  // namespace

PackedSequence pack_context_response(const Dialogue& context, const Utterance& response,
                                     const Vocab& vocab, std::size_t max_ctx,
                                     std::size_t max_resp) {
  if (context.utterances.empty()) throw Error("packing: empty context");
  std::vector<Item> left = context_items(context.utterances, vocab, 0);
  truncate_front(left, max_ctx, 2);  // [CLS] and [SEP]

  std::vector<Item> right;
  append_utterance_items(response, context.utterances.size(), /*with_eot=*/false,
                         vocab, right);
  truncate_back(right, max_resp, 1);  // trailing [SEP]
  return assemble(left, &right);
}

PackedSequence pack_context(const Dialogue& context, const Vocab& vocab,
                            std::size_t max_len) {
  if (context.utterances.empty()) throw Error("packing: empty context");
  std::vector<Item> left = context_items(context.utterances, vocab, 0);
  truncate_front(left, max_len, 2);
  return assemble(left, nullptr);
}

PackedSequence pack_session_pair(const std::vector<Utterance>& left_utts,
                                 const std::vector<Utterance>& right_utts,
                                 const Vocab& vocab, std::size_t max_len) {
  if (left_utts.empty()) throw Error("packing: empty left piece");
  if (right_utts.empty()) throw Error("packing: empty right piece");
  std::vector<Item> left = context_items(left_utts, vocab, 0);
  std::vector<Item> right = context_items(right_utts, vocab, left_utts.size());

  // Left gets at least half the budget, more when the right piece is short.
  const std::size_t right_need = right.size() + 1;
  const std::size_t left_budget =
      std::max(max_len / 2, max_len > right_need ? max_len - right_need : 0);
  truncate_front(left, left_budget, 2);
  truncate_back(right, max_len - (left.size() + 2), 1);
  return assemble(left, &right);
}

PackedSequence pack_masked_context(const Dialogue& context, std::size_t masked_turn,
                                   const Vocab& vocab, std::size_t max_len) {
  const std::size_t m = context.turns();
  if (m < 2) throw Error("packing: need at least 2 turns to mask one");
  if (masked_turn < 1 || masked_turn > m)
    throw Error("packing: masked turn " + std::to_string(masked_turn) +
                " outside 1.." + std::to_string(m));
  Dialogue masked = context;
  Utterance& target = masked.utterances[masked_turn - 1];
  const std::size_t l_t =
      (target.tokens.empty() ? tokenize(target.text) : target.tokens).size();
  if (l_t == 0) throw Error("packing: empty utterance at masked turn");
  target.tokens.assign(l_t, "[MASK]");  // same length, all [MASK]
  PackedSequence p = pack_context(masked, vocab, max_len);

  // The masked utterance must have survived truncation intact.
  std::size_t run_start = 0, run_len = 0;
  for (std::size_t i = 0; i < p.token_ids.size(); ++i) {
    if (p.token_ids[i] == Vocab::kMask) {
      if (run_len == 0) run_start = i;
      ++run_len;
    }
  }
  if (run_len != l_t)
    throw Error("packing: masked utterance truncated (kept " +
                std::to_string(run_len) + " of " + std::to_string(l_t) + " ids)");
  p.mask_span = {run_start, run_start + run_len};
  return p;
}

PackedSequence pack_utterance_pair(const Utterance& u, const Utterance& v,
                                   const Vocab& vocab, std::size_t max_len) {
  std::vector<Item> left, right;
  append_utterance_items(u, 0, /*with_eot=*/false, vocab, left);
  append_utterance_items(v, 1, /*with_eot=*/false, vocab, right);
  const std::size_t right_need = right.size() + 1;
  const std::size_t left_budget =
      std::max(max_len / 2, max_len > right_need ? max_len - right_need : 0);
  truncate_front(left, left_budget, 2);
  truncate_back(right, max_len - (left.size() + 2), 1);
  return assemble(left, &right);
}

}  // namespace dialsel
