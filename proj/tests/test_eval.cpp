#include <cmath>

#include "dialsel/eval.hpp"
#include "doctest.h"
#include "json.hpp"
#include "oracles.hpp"

using namespace dialsel;

namespace {

Dialogue make_dialogue(std::string id, const std::vector<std::string>& texts) {
  Dialogue d;
  d.id = std::move(id);
  for (std::size_t i = 0; i < texts.size(); ++i) {
    Utterance u;
    u.turn_index = i + 1;
    u.text = texts[i];
    d.utterances.push_back(std::move(u));
  }
  return d;
}

LabeledPair make_pair(const Dialogue& ctx, const std::string& response, int label) {
  LabeledPair p;
  p.context = ctx;
  p.response.turn_index = ctx.turns() + 1;
  p.response.text = response;
  p.label = label;
  return p;
}

RankingResult result_with(std::vector<double> scores, std::size_t positive,
                          std::size_t turns = 2, std::size_t tokens = 10) {
  RankingResult r;
  r.scores = std::move(scores);
  r.positive_index = positive;
  r.rank = rank_of(r.scores, positive);
  r.turns = turns;
  r.context_tokens = tokens;
  return r;
}

}  // namespace

TEST_CASE("pairs group by shared context text") {
  Dialogue c1 = make_dialogue("c1", {"hello there", "hi"});
  Dialogue c2 = make_dialogue("c2", {"how are you", "fine"});
  std::vector<LabeledPair> pairs{
      make_pair(c1, "good to hear", 1), make_pair(c1, "spam", 0),
      make_pair(c2, "nonsense", 0),     make_pair(c2, "glad", 1),
      make_pair(c2, "more spam", 0),
  };
  std::vector<CandidateGroup> groups = group_pairs(pairs, 0);
  REQUIRE(groups.size() == 2);
  CHECK(groups[0].candidates.size() == 2);
  CHECK(groups[0].positive_index == 0);
  CHECK(groups[1].candidates.size() == 3);
  CHECK(groups[1].positive_index == 1);
  CHECK(groups[0].context.turns() == 2);

  SUBCASE("fixed chunking ignores context equality") {
    std::vector<LabeledPair> flat;
    for (int g = 0; g < 3; ++g) {
      Dialogue ctx = make_dialogue("x" + std::to_string(g), {"text " + std::to_string(g)});
      flat.push_back(make_pair(ctx, "right", 1));
      flat.push_back(make_pair(ctx, "wrong", 0));
    }
    std::vector<CandidateGroup> fixed = group_pairs(flat, 2);
    CHECK(fixed.size() == 3);
    CHECK_THROWS_WITH_AS(group_pairs(flat, 4), doctest::Contains("divide"), Error);
  }
  SUBCASE("groups without exactly one positive are rejected") {
    std::vector<LabeledPair> two{make_pair(c1, "a", 1), make_pair(c1, "b", 1)};
    CHECK_THROWS_WITH_AS(group_pairs(two, 0), doctest::Contains("positives"), Error);
    std::vector<LabeledPair> zero{make_pair(c1, "a", 0), make_pair(c1, "b", 0)};
    CHECK_THROWS_AS(group_pairs(zero, 0), Error);
  }
}

TEST_CASE("rank_of breaks ties by input order") {
  CHECK(rank_of({0.9, 0.5, 0.1}, 0) == 1);
  CHECK(rank_of({0.9, 0.5, 0.1}, 2) == 3);
  // equal scores: the earlier candidate wins
  CHECK(rank_of({0.5, 0.5, 0.5}, 0) == 1);
  CHECK(rank_of({0.5, 0.5, 0.5}, 1) == 2);
  CHECK(rank_of({0.5, 0.5, 0.5}, 2) == 3);
  CHECK(rank_of({0.1, 0.9, 0.1}, 2) == 3);

  SUBCASE("matches a sorting oracle on random groups") {
    Rng rng(314);
    for (int trial = 0; trial < 1000; ++trial) {
      const std::size_t n = 2 + rng.uniform_index(12);
      std::vector<double> scores(n);
      for (double& s : scores) {
        s = rng.uniform01();
        if (rng.uniform_index(4) == 0) s = std::floor(s * 4) / 4;  // force ties
      }
      const std::size_t pos = rng.uniform_index(n);
      CHECK(rank_of(scores, pos) == oracles::rank_by_sorting(scores, pos));
    }
  }
}

TEST_CASE("recall matches hand-computed and oracle values") {
  std::vector<RankingResult> two{
      result_with({0.9, 0.1}, 0),  // rank 1
      result_with({0.4, 0.6}, 0),  // rank 2
  };
  CHECK(recall_at_k(two, 2, 1) == doctest::Approx(0.5));
  CHECK(recall_at_k(two, 2, 2) == doctest::Approx(1.0));

  // ranks 1 and 3: R@1 = 0.5, R@2 = 0.5, R@5 = 1.0
  std::vector<RankingResult> ten{
      result_with({0.9, 0.8, 0.7, 0.6, 0.5, 0.4, 0.3, 0.2, 0.1, 0.0}, 0),
      result_with({0.9, 0.8, 0.7, 0.6, 0.5, 0.4, 0.3, 0.2, 0.1, 0.0}, 2),
  };
  CHECK(recall_at_k(ten, 10, 1) == doctest::Approx(0.5));
  CHECK(recall_at_k(ten, 10, 2) == doctest::Approx(0.5));
  CHECK(recall_at_k(ten, 10, 5) == doctest::Approx(1.0));

  CHECK_THROWS_WITH_AS(recall_at_k({}, 10, 1), doctest::Contains("no groups"), Error);
  CHECK_THROWS_AS(recall_at_k(ten, 10, 0), Error);
  CHECK_THROWS_AS(recall_at_k(ten, 10, 11), Error);
  std::vector<RankingResult> mixed{result_with({0.9, 0.1}, 0)};
  CHECK_THROWS_AS(recall_at_k(mixed, 10, 1), Error);

  SUBCASE("random groups agree with the sorting oracle") {
    Rng rng(2718);
    std::vector<RankingResult> results;
    std::vector<std::vector<double>> raw;
    std::vector<std::size_t> positives;
    for (int g = 0; g < 1000; ++g) {
      std::vector<double> scores(10);
      for (double& s : scores) s = rng.uniform01();
      const std::size_t pos = rng.uniform_index(10);
      results.push_back(result_with(scores, pos));
      raw.push_back(scores);
      positives.push_back(pos);
    }
    for (std::size_t k : {1u, 2u, 5u, 10u}) {
      CHECK(recall_at_k(results, 10, k) ==
            doctest::Approx(oracles::recall_by_sorting(raw, positives, k)).epsilon(1e-12));
    }
    // recall grows with k and tops out at 1
    double prev = 0.0;
    for (std::size_t k = 1; k <= 10; ++k) {
      const double r = recall_at_k(results, 10, k);
      CHECK(r >= prev);
      prev = r;
    }
    CHECK(prev == doctest::Approx(1.0));
  }
}

TEST_CASE("random scores land near chance level") {
  Rng rng(99);
  std::vector<RankingResult> results;
  for (int g = 0; g < 4000; ++g) {
    std::vector<double> scores(10);
    for (double& s : scores) s = rng.uniform01();
    results.push_back(result_with(scores, rng.uniform_index(10)));
  }
  const double r1 = recall_at_k(results, 10, 1);
  CHECK(r1 > 0.07);
  CHECK(r1 < 0.13);
}

TEST_CASE("metric report partitions by group size") {
  std::vector<RankingResult> results{
      result_with({0.9, 0.1}, 0),
      result_with({0.2, 0.8}, 0),
      result_with({0.9, 0.8, 0.7, 0.6, 0.5, 0.4, 0.3, 0.2, 0.1, 0.0}, 0),
      result_with({0.5, 0.5, 0.5}, 1),
  };
  MetricReport report = make_metric_report(results);
  CHECK(report.groups_n2 == 2);
  CHECK(report.groups_n10 == 1);
  CHECK(report.groups_other == 1);
  REQUIRE(report.r2_at_1.has_value());
  CHECK(*report.r2_at_1 == doctest::Approx(0.5));
  REQUIRE(report.r10_at_1.has_value());
  CHECK(*report.r10_at_1 == doctest::Approx(1.0));

  auto j = nlohmann::json::parse(metric_report_json(report));
  CHECK(j.at("R_2@1").get<double>() == doctest::Approx(0.5));
  CHECK(j.at("R_10@1").get<double>() == doctest::Approx(1.0));
  CHECK(j.at("groups").at("n2").get<int>() == 2);

  std::vector<RankingResult> only2{result_with({0.9, 0.1}, 0)};
  MetricReport r2 = make_metric_report(only2);
  CHECK(!r2.r10_at_1.has_value());
  auto j2 = nlohmann::json::parse(metric_report_json(r2));
  CHECK(j2.at("R_10@1").is_null());
  CHECK(metric_report_table(r2).find("n/a") != std::string::npos);
}

TEST_CASE("perfect and inverted scorers hit the metric extremes") {
  // scores equal to the label: positive always ranks first
  std::vector<RankingResult> perfect, inverted;
  Rng rng(5);
  for (int g = 0; g < 50; ++g) {
    const std::size_t pos = rng.uniform_index(10);
    std::vector<double> sp(10, 0.0), si(10, 1.0);
    sp[pos] = 1.0;
    si[pos] = 0.0;
    perfect.push_back(result_with(sp, pos));
    inverted.push_back(result_with(si, pos));
  }
  CHECK(recall_at_k(perfect, 10, 1) == doctest::Approx(1.0));
  CHECK(recall_at_k(inverted, 10, 1) == doctest::Approx(0.0));
  CHECK(recall_at_k(inverted, 10, 9) == doctest::Approx(0.0));
  CHECK(recall_at_k(inverted, 10, 10) == doctest::Approx(1.0));
}

TEST_CASE("length breakdown buckets by turns or tokens") {
  std::vector<RankingResult> results{
      result_with({0.9, 0.1}, 0, /*turns=*/3, /*tokens=*/30),
      result_with({0.2, 0.8}, 0, /*turns=*/7, /*tokens=*/80),
      result_with({0.9, 0.1}, 0, /*turns=*/7, /*tokens=*/80),
      result_with({0.9, 0.1}, 0, /*turns=*/12, /*tokens=*/200),
  };
  std::vector<LengthBucket> buckets =
      length_breakdown(results, LengthMode::turns, {0, 5, 10});
  REQUIRE(buckets.size() == 3);
  CHECK(buckets[0].lo == 0);
  REQUIRE(buckets[0].hi.has_value());
  CHECK(*buckets[0].hi == 5);
  CHECK(buckets[0].group_count == 1);
  CHECK(buckets[1].group_count == 2);
  REQUIRE(buckets[1].report.r2_at_1.has_value());
  CHECK(*buckets[1].report.r2_at_1 == doctest::Approx(0.5));
  CHECK(!buckets[2].hi.has_value());  // final bucket is open-ended
  CHECK(buckets[2].group_count == 1);

  SUBCASE("token mode uses pre-truncation token counts") {
    std::vector<LengthBucket> tb =
        length_breakdown(results, LengthMode::tokens, {0, 50, 100});
    CHECK(tb[0].group_count == 1);
    CHECK(tb[1].group_count == 2);
    CHECK(tb[2].group_count == 1);
  }
  SUBCASE("empty buckets stay empty instead of reading as zero") {
    std::vector<LengthBucket> eb =
        length_breakdown(results, LengthMode::turns, {0, 1, 2});
    CHECK(eb[1].group_count == 0);
    CHECK(!eb[1].report.r2_at_1.has_value());
    const std::string csv = breakdown_csv(eb);
    CHECK(csv.find("1,2,0,") != std::string::npos);
  }
  SUBCASE("a single bucket reproduces the global report") {
    std::vector<LengthBucket> one =
        length_breakdown(results, LengthMode::turns, {0});
    REQUIRE(one.size() == 1);
    CHECK(one[0].group_count == 4);
    MetricReport global = make_metric_report(results);
    CHECK(*one[0].report.r2_at_1 == doctest::Approx(*global.r2_at_1));
  }
  SUBCASE("edge validation") {
    CHECK_THROWS_WITH_AS(length_breakdown(results, LengthMode::turns, {0, 5, 5}),
                         doctest::Contains("increasing"), Error);
    CHECK_THROWS_AS(length_breakdown(results, LengthMode::turns, {}), Error);
    // a result below the first edge has nowhere to go
    CHECK_THROWS_AS(length_breakdown(results, LengthMode::turns, {5, 10}), Error);
  }
  SUBCASE("csv and json carry the bucket boundaries") {
    const std::string csv = breakdown_csv(buckets);
    CHECK(csv.find("bucket_lo,bucket_hi,groups") == 0);
    CHECK(csv.find("10,inf,") != std::string::npos);
    auto j = nlohmann::json::parse(breakdown_json(buckets));
    REQUIRE(j.is_array());
    CHECK(j.size() == 3);
    CHECK(j[2].at("hi").is_null());
    CHECK(j[1].at("report").at("R_2@1").get<double>() == doctest::Approx(0.5));
  }
}

TEST_CASE("rank_group scores candidates with the model") {
  std::vector<Dialogue> corpus{
      make_dialogue("d1", {"alpha beta", "gamma delta", "epsilon zeta", "eta theta"}),
      make_dialogue("d2", {"iota kappa", "lambda mu", "nu xi"}),
  };
  Vocab vocab = build_vocab(corpus, 1, 1000);
  EncoderConfig cfg;
  cfg.layers = 1;
  cfg.heads = 2;
  cfg.d_model = 8;
  cfg.d_ff = 16;
  cfg.vocab_size = vocab.size();
  cfg.max_len = 64;
  cfg.dropout = 0.0;
  MatcherModel model(cfg, 8);

  CandidateGroup group;
  group.context_id = "g0";
  group.context = make_dialogue("d1", {"alpha beta", "gamma delta"});
  for (const std::string text : {"epsilon zeta", "lambda mu", "nu xi"}) {
    Utterance u;
    u.turn_index = 3;
    u.text = text;
    group.candidates.push_back(u);
  }
  group.positive_index = 0;

  PackLimits limits{28, 8, 64};
  RankingResult res = rank_group(model, group, vocab, limits);
  REQUIRE(res.scores.size() == 3);
  CHECK(res.turns == 2);
  CHECK(res.context_tokens == 4);  // "alpha beta gamma delta"
  CHECK(res.rank == rank_of(res.scores, 0));
  for (double s : res.scores) {
    CHECK(s > 0.0);
    CHECK(s < 1.0);
  }
  // scores come straight from the pair scorer
  PackedSequence packed = pack_context_response(group.context, group.candidates[1],
                                                vocab, limits.max_ctx, limits.max_resp);
  CHECK(res.scores[1] == score_pair(model, packed));
}
