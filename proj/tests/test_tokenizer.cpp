#include <fstream>
#include <numeric>

#include "dialsel/tokenizer.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace dialsel;

namespace {

Dialogue make_dialogue(const std::vector<std::string>& texts) {
  Dialogue d;
  d.id = "t";
  for (std::size_t i = 0; i < texts.size(); ++i)
    d.utterances.push_back({i + 1, texts[i], {}});
  return d;
}

Utterance make_response(const std::string& text, std::size_t turn) {
  return Utterance{turn, text, {}};
}

// Vocabulary over every token appearing in the dialogue + extras.
Vocab vocab_over(const std::vector<std::string>& texts) {
  Vocab v;
  for (const std::string& t : texts)
    for (const std::string& tok : tokenize(t)) v.add(tok);
  return v;
}

}  // namespace

TEST_CASE("tokenize lowercases, splits punctuation, keeps high bytes") {
  CHECK(tokenize("Hello there") == std::vector<std::string>{"hello", "there"});
  CHECK(tokenize("what?now") == std::vector<std::string>{"what", "?", "now"});
  CHECK(tokenize("a,b.c") == std::vector<std::string>{"a", ",", "b", ".", "c"});
  CHECK(tokenize("  many   spaces  ") == std::vector<std::string>{"many", "spaces"});
  CHECK(tokenize("") == std::vector<std::string>{});
  CHECK(tokenize("caf\xc3\xa9 time") == std::vector<std::string>{"caf\xc3\xa9", "time"});
  CHECK(tokenize("top3w7") == std::vector<std::string>{"top3w7"});
}

TEST_CASE("vocab reserves the six structural ids") {
  Vocab v;
  CHECK(v.size() == Vocab::kReservedCount);
  CHECK(v.token_of(Vocab::kPad) == "[PAD]");
  CHECK(v.token_of(Vocab::kCls) == "[CLS]");
  CHECK(v.token_of(Vocab::kSep) == "[SEP]");
  CHECK(v.token_of(Vocab::kEot) == "[EOT]");
  CHECK(v.token_of(Vocab::kMask) == "[MASK]");
  CHECK(v.token_of(Vocab::kUnk) == "[UNK]");
  CHECK(v.id_of("never seen") == Vocab::kUnk);
  v.add("word");
  CHECK(v.id_of("word") == Vocab::kReservedCount);
}

TEST_CASE("build_vocab ranks by frequency then lexicographically") {
  std::vector<Dialogue> corpus{
      make_dialogue({"b b b a a c", "a c zz"})};  // freq: a=3 b=3 c=2 zz=1
  Vocab v = build_vocab(corpus, 1, 100);
  CHECK(v.id_of("a") == 6);  // ties broken by token order
  CHECK(v.id_of("b") == 7);
  CHECK(v.id_of("c") == 8);
  CHECK(v.id_of("zz") == 9);

  SUBCASE("min_freq filters") {
    Vocab f = build_vocab(corpus, 2, 100);
    CHECK(f.id_of("zz") == Vocab::kUnk);
    CHECK(f.size() == 9);
  }
  SUBCASE("max_size caps the table, reserved included") {
    Vocab c = build_vocab(corpus, 1, 8);
    CHECK(c.size() == 8);
    CHECK(c.id_of("a") == 6);
    CHECK(c.id_of("b") == 7);
    CHECK(c.id_of("c") == Vocab::kUnk);
  }
  SUBCASE("max_size below the reserved block is rejected") {
    CHECK_THROWS_AS(build_vocab(corpus, 1, 5), ConfigError);
  }
}

TEST_CASE("vocab files round trip and validate the reserved header") {
  std::vector<Dialogue> corpus{make_dialogue({"alpha beta gamma"})};
  Vocab v = build_vocab(corpus, 1, 100);
  save_vocab("tok_test_vocab.txt", v);
  Vocab r = load_vocab("tok_test_vocab.txt");
  CHECK(r.size() == v.size());
  CHECK(r.id_of("beta") == v.id_of("beta"));

  std::ofstream bad("tok_test_bad.txt");
  bad << "[PAD]\n[CLS]\nwrong\n";
  bad.close();
  CHECK_THROWS_AS(load_vocab("tok_test_bad.txt"), LoadError);
}

TEST_CASE("pack_context_response lays out blocks, segments and spans") {
  auto texts = std::vector<std::string>{"a b", "c"};
  Dialogue ctx = make_dialogue(texts);
  Vocab v = vocab_over({"a b", "c", "d e"});
  PackedSequence p = pack_context_response(ctx, make_response("d e", 3), v, 448, 64);

  // [CLS] a b [EOT] c [EOT] [SEP] d e [SEP]
  const std::size_t a = v.id_of("a"), b = v.id_of("b"), c = v.id_of("c");
  const std::size_t d = v.id_of("d"), e = v.id_of("e");
  CHECK(p.token_ids == std::vector<std::size_t>{Vocab::kCls, a, b, Vocab::kEot, c,
                                                Vocab::kEot, Vocab::kSep, d, e,
                                                Vocab::kSep});
  CHECK(p.segment_ids == std::vector<std::size_t>{0, 0, 0, 0, 0, 0, 0, 1, 1, 1});
  std::vector<std::size_t> expected_pos(p.size());
  std::iota(expected_pos.begin(), expected_pos.end(), 0);
  CHECK(p.positions == expected_pos);
  // two context utterances plus the response block
  REQUIRE(p.utterance_spans.size() == 3);
  CHECK(p.utterance_spans[0] == std::pair<std::size_t, std::size_t>{1, 3});
  CHECK(p.utterance_spans[1] == std::pair<std::size_t, std::size_t>{4, 5});
  CHECK(p.utterance_spans[2] == std::pair<std::size_t, std::size_t>{7, 9});
  CHECK(!p.mask_span.has_value());
}

TEST_CASE("front truncation keeps the newest context and drops orphan markers") {
  // 600 single-token utterances against the default budgets.
  std::vector<std::string> texts(600, "w");
  Dialogue ctx = make_dialogue(texts);
  Vocab v = vocab_over({"w", "r"});
  PackedSequence p = pack_context_response(ctx, make_response("r", 601), v, 448, 64);
  const std::size_t sep_at =
      std::find(p.token_ids.begin(), p.token_ids.end(), Vocab::kSep) -
      p.token_ids.begin();
  CHECK(sep_at + 1 == 448);       // context block exactly at budget
  CHECK(p.size() == 448 + 2);     // response block: r + [SEP]
  CHECK(p.token_ids[0] == Vocab::kCls);
  CHECK(p.token_ids[1] == v.id_of("w"));  // never starts on an [EOT]
  CHECK(p.size() <= 512);
}

TEST_CASE("packing matches the stepwise reference on adversarial shapes") {
  Vocab v;
  for (int i = 0; i < 40; ++i) v.add("tok" + std::to_string(i));
  Rng rng(41);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t m = 1 + rng.uniform_index(8);
    std::vector<std::string> texts;
    std::vector<std::vector<std::size_t>> utt_ids;
    for (std::size_t t = 0; t < m; ++t) {
      const std::size_t len = 1 + rng.uniform_index(9);
      std::string text;
      std::vector<std::size_t> ids;
      for (std::size_t w = 0; w < len; ++w) {
        const std::string tok = "tok" + std::to_string(rng.uniform_index(40));
        text += (w ? " " : "") + tok;
        ids.push_back(v.id_of(tok));
      }
      texts.push_back(text);
      utt_ids.push_back(ids);
    }
    std::vector<std::size_t> resp_ids;
    std::string resp_text;
    const std::size_t rlen = 1 + rng.uniform_index(12);
    for (std::size_t w = 0; w < rlen; ++w) {
      const std::string tok = "tok" + std::to_string(rng.uniform_index(40));
      resp_text += (w ? " " : "") + tok;
      resp_ids.push_back(v.id_of(tok));
    }
    const std::size_t max_ctx = 4 + rng.uniform_index(60);
    const std::size_t max_resp = 2 + rng.uniform_index(12);

    Dialogue ctx = make_dialogue(texts);
    PackedSequence p =
        pack_context_response(ctx, make_response(resp_text, m + 1), v, max_ctx, max_resp);
    oracles::PackedRef ref = oracles::pack_pair_reference(
        utt_ids, resp_ids, max_ctx, max_resp, Vocab::kCls, Vocab::kSep, Vocab::kEot);
    REQUIRE(p.token_ids == ref.ids);
    for (std::size_t i = 0; i < p.size(); ++i)
      CHECK(p.segment_ids[i] == (i < ref.context_block ? 0u : 1u));
  }
}

TEST_CASE("packing rejects impossible budgets") {
  Dialogue ctx = make_dialogue({"a b c"});
  Vocab v = vocab_over({"a b c"});
  CHECK_THROWS_AS(pack_context_response(ctx, make_response("a", 2), v, 2, 8), Error);
}

TEST_CASE("pack_context is a single all-zero-segment block") {
  Dialogue ctx = make_dialogue({"a b", "c"});
  Vocab v = vocab_over({"a b", "c"});
  PackedSequence p = pack_context(ctx, v, 512);
  CHECK(p.token_ids.back() == Vocab::kSep);
  for (std::size_t s : p.segment_ids) CHECK(s == 0);
  CHECK(p.utterance_spans.size() == 2);
}

TEST_CASE("pack_session_pair splits the budget between halves") {
  std::vector<std::string> texts(8, "a b c");
  Dialogue d = make_dialogue(texts);
  Vocab v = vocab_over({"a b c"});
  std::vector<Utterance> left(d.utterances.begin(), d.utterances.begin() + 4);
  std::vector<Utterance> right(d.utterances.begin() + 4, d.utterances.end());
  PackedSequence p = pack_session_pair(left, right, v, 24);
  CHECK(p.size() <= 24);
  // both halves keep some content and exactly two separators exist
  CHECK(std::count(p.token_ids.begin(), p.token_ids.end(), Vocab::kSep) == 2);
  const std::size_t first_sep =
      std::find(p.token_ids.begin(), p.token_ids.end(), Vocab::kSep) -
      p.token_ids.begin();
  CHECK(first_sep > 1);
  CHECK(first_sep + 2 < p.size());
  // segment flips exactly once, right after the first separator
  for (std::size_t i = 0; i < p.size(); ++i)
    CHECK(p.segment_ids[i] == (i <= first_sep ? 0u : 1u));
}

TEST_CASE("pack_masked_context masks the full utterance") {
  Dialogue ctx = make_dialogue({"a b", "c d e", "f"});
  Vocab v = vocab_over({"a b", "c d e", "f"});
  PackedSequence p = pack_masked_context(ctx, 2, v, 512);
  REQUIRE(p.mask_span.has_value());
  auto [s, e] = *p.mask_span;
  CHECK(e - s == 3);
  for (std::size_t i = s; i < e; ++i) CHECK(p.token_ids[i] == Vocab::kMask);
  // everything else matches the unmasked packing
  PackedSequence q = pack_context(ctx, v, 512);
  REQUIRE(q.size() == p.size());
  for (std::size_t i = 0; i < p.size(); ++i)
    if (i < s || i >= e) CHECK(p.token_ids[i] == q.token_ids[i]);

  SUBCASE("a mask destroyed by truncation is an error") {
    std::vector<std::string> texts{"a b c d e", "f", "f", "f"};
    Dialogue big = make_dialogue(texts);
    CHECK_THROWS_WITH_AS(pack_masked_context(big, 1, v, 8),
                         doctest::Contains("truncat"), Error);
  }
}

TEST_CASE("pack_utterance_pair carries no turn markers") {
  Vocab v = vocab_over({"a b", "c"});
  Utterance u{1, "a b", {}};
  Utterance w{3, "c", {}};
  PackedSequence p = pack_utterance_pair(u, w, v, 512);
  CHECK(std::count(p.token_ids.begin(), p.token_ids.end(), Vocab::kEot) == 0);
  CHECK(p.token_ids == std::vector<std::size_t>{Vocab::kCls, v.id_of("a"), v.id_of("b"),
                                                Vocab::kSep, v.id_of("c"), Vocab::kSep});
}
