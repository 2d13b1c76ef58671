#include <fstream>

#include "dialsel/corpus.hpp"
#include "doctest.h"
#include "json.hpp"

using namespace dialsel;

namespace {

std::string write_temp(const std::string& name, const std::string& content) {
  const std::string path = "corpus_test_" + name;
  std::ofstream os(path);
  os << content;
  return path;
}

}  // namespace

TEST_CASE("pairs tsv loads labels, utterances and responses") {
  const std::string path = write_temp(
      "ok.tsv",
      "1\thello there__eot__hi , how are you ?\ti am fine\n"
      "0\thello there__eot__hi , how are you ?\tpotato salad\n");
  auto pairs = load_pairs_tsv(path);
  REQUIRE(pairs.size() == 2);
  CHECK(pairs[0].label == 1);
  CHECK(pairs[1].label == 0);
  REQUIRE(pairs[0].context.turns() == 2);
  CHECK(pairs[0].context.utterances[0].text == "hello there");
  CHECK(pairs[0].context.utterances[1].turn_index == 2);
  CHECK(pairs[0].response.text == "i am fine");
  CHECK(pairs[0].response.turn_index == 3);
  CHECK(pairs[0].context.utterances[0].speaker() == Speaker::A);
  CHECK(pairs[0].context.utterances[1].speaker() == Speaker::B);
}

TEST_CASE("pairs tsv round trips through serialization") {
  const std::string text =
      "1\ta b__eot__c d__eot__e\tf g\n"
      "0\ta b__eot__c d__eot__e\th\n";
  const std::string path = write_temp("round.tsv", text);
  CHECK(serialize_pairs_tsv(load_pairs_tsv(path)) == text);
}

TEST_CASE("pairs tsv errors name the line") {
  SUBCASE("wrong field count") {
    const std::string path = write_temp("fields.tsv", "1\tonly two fields\n");
    CHECK_THROWS_WITH_AS(load_pairs_tsv(path), doctest::Contains(":1: expected 3"),
                         LoadError);
  }
  SUBCASE("bad label") {
    const std::string path = write_temp("label.tsv", "2\ta\tb\n");
    CHECK_THROWS_WITH_AS(load_pairs_tsv(path), doctest::Contains("label"), LoadError);
  }
  SUBCASE("empty utterance") {
    const std::string path = write_temp("emptyutt.tsv", "1\ta__eot__ __eot__b\tc\n");
    CHECK_THROWS_AS(load_pairs_tsv(path), LoadError);
  }
  SUBCASE("empty response") {
    const std::string path = write_temp("emptyresp.tsv", "1\ta\t \n");
    CHECK_THROWS_AS(load_pairs_tsv(path), LoadError);
  }
  SUBCASE("missing file") {
    CHECK_THROWS_WITH_AS(load_pairs_tsv("corpus_test_nope.tsv"),
                         doctest::Contains("cannot open"), Error);
  }
}

TEST_CASE("dialogues jsonl loads and round trips") {
  const std::string path = write_temp(
      "ok.jsonl",
      "{\"id\":\"d1\",\"utterances\":[\"a b\",\"c\"]}\n"
      "{\"id\":\"d2\",\"utterances\":[\"x\",\"y\",\"z\"]}\n");
  auto dialogues = load_dialogues_jsonl(path);
  REQUIRE(dialogues.size() == 2);
  CHECK(dialogues[0].id == "d1");
  CHECK(dialogues[0].turns() == 2);
  CHECK(dialogues[1].utterances[2].text == "z");
  CHECK(dialogues[1].utterances[2].turn_index == 3);

  const std::string again = serialize_dialogues_jsonl(dialogues);
  const std::string path2 = write_temp("again.jsonl", again);
  CHECK(serialize_dialogues_jsonl(load_dialogues_jsonl(path2)) == again);
}

TEST_CASE("dialogues jsonl rejects malformed input") {
  SUBCASE("invalid json") {
    const std::string path = write_temp("bad.jsonl", "{\"id\": oops}\n");
    CHECK_THROWS_WITH_AS(load_dialogues_jsonl(path),
                         doctest::Contains(":1: invalid JSON"), LoadError);
  }
  SUBCASE("duplicate ids name both lines") {
    const std::string path = write_temp(
        "dup.jsonl",
        "{\"id\":\"d\",\"utterances\":[\"a\"]}\n"
        "{\"id\":\"d\",\"utterances\":[\"b\"]}\n");
    CHECK_THROWS_WITH_AS(load_dialogues_jsonl(path), doctest::Contains("line 1"),
                         LoadError);
  }
  SUBCASE("empty dialogue") {
    const std::string path = write_temp("noutt.jsonl", "{\"id\":\"d\",\"utterances\":[]}\n");
    CHECK_THROWS_AS(load_dialogues_jsonl(path), LoadError);
  }
  SUBCASE("crlf line endings are tolerated") {
    const std::string path =
        write_temp("crlf.jsonl", "{\"id\":\"d\",\"utterances\":[\"a\"]}\r\n");
    CHECK(load_dialogues_jsonl(path).size() == 1);
  }
}

TEST_CASE("corpus stats count turns, tokens and labels") {
  const std::string dpath = write_temp(
      "stats.jsonl",
      "{\"id\":\"d1\",\"utterances\":[\"a b\",\"c d e\"]}\n"
      "{\"id\":\"d2\",\"utterances\":[\"x\",\"y\"]}\n");
  const std::string ppath = write_temp("stats.tsv",
                                       "1\ta\tb\n"
                                       "0\ta\tc\n"
                                       "0\ta\td\n");
  auto dialogues = load_dialogues_jsonl(dpath);
  auto pairs = load_pairs_tsv(ppath);
  CorpusStats stats = corpus_stats(dialogues, &pairs);
  CHECK(stats.dialogue_count == 2);
  CHECK(stats.turn_histogram.at(2) == 2);
  CHECK(stats.token_histogram.at(5) == 1);  // "a b" + "c d e"
  CHECK(stats.token_histogram.at(2) == 1);
  CHECK(stats.positive_pairs == 1);
  CHECK(stats.negative_pairs == 2);

  auto parsed = nlohmann::json::parse(stats_to_json(stats));
  CHECK(parsed["dialogue_count"] == 2);
  CHECK(parsed["positive_pairs"] == 1);
  CHECK(parsed["turn_histogram"]["2"] == 2);

  std::vector<Dialogue> none;
  CHECK_THROWS_AS(corpus_stats(none, nullptr), Error);
}

TEST_CASE("sample_other_dialogue never returns the excluded id") {
  std::vector<Dialogue> corpus(3);
  corpus[0].id = "a";
  corpus[1].id = "b";
  corpus[2].id = "c";
  Rng rng(11);
  for (int i = 0; i < 200; ++i)
    CHECK(sample_other_dialogue(corpus, "b", rng).id != "b");

  std::vector<Dialogue> lone(1);
  lone[0].id = "a";
  CHECK_THROWS_AS(sample_other_dialogue(lone, "a", rng), Error);
}
