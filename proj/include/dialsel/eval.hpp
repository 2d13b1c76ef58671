#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dialsel/model.hpp"

namespace dialsel {

// One ranking problem: a shared context and n candidate responses with
// exactly one positive.
struct CandidateGroup {
  std::string context_id;
  Dialogue context;
  std::vector<Utterance> candidates;
  std::size_t positive_index = 0;
};

struct RankingResult {
  std::string context_id;
  std::vector<double> scores;      // one per candidate, input order
  std::size_t positive_index = 0;
  std::size_t rank = 1;            // 1-based rank of the positive
  std::size_t turns = 0;           // context utterance count
  std::size_t context_tokens = 0;  // pre-truncation context token count
};

// Labeled pairs -> groups. group_size == 0 groups consecutive pairs that
// share the exact context text; otherwise pairs are cut into fixed-size
// chunks (count must divide evenly). Every group needs exactly one positive.
std::vector<CandidateGroup> group_pairs(std::span<const LabeledPair> pairs,
                                        std::size_t group_size = 0);

// 1-based rank of scores[positive] with ties broken by input order:
// earlier candidates outrank later ones at equal score.
std::size_t rank_of(const std::vector<double>& scores, std::size_t positive);

// Scores every candidate against the shared context. Ties rank by input
// order, earlier candidate first, so results are deterministic.
RankingResult rank_group(const MatcherModel& model, const CandidateGroup& group,
                         const Vocab& vocab, const PackLimits& limits);

// Fraction of groups whose positive lands in the top k. Every group must
// have exactly n candidates.
double recall_at_k(const std::vector<RankingResult>& results, std::size_t n,
                   std::size_t k);

struct MetricReport {
  std::optional<double> r2_at_1;
  std::optional<double> r10_at_1;
  std::optional<double> r10_at_2;
  std::optional<double> r10_at_5;
  std::size_t groups_n2 = 0;
  std::size_t groups_n10 = 0;
  std::size_t groups_other = 0;
};

// Metrics over whichever group sizes are present; sizes outside {2, 10} are
// counted but carry no standard metric.
MetricReport make_metric_report(const std::vector<RankingResult>& results);
std::string metric_report_json(const MetricReport& report);
std::string metric_report_table(const MetricReport& report);

enum class LengthMode { turns, tokens };
LengthMode length_mode_from_string(const std::string& name);

struct LengthBucket {
  std::size_t lo = 0;
  std::optional<std::size_t> hi;  // absent = open-ended final bucket
  MetricReport report;
  std::size_t group_count = 0;
};

// Partition results by context turns or tokens into [e_i, e_{i+1}) buckets
// plus a final open [e_last, inf). Edges must be strictly increasing and
// cover every result. Empty buckets stay empty rather than reading as 0.
std::vector<LengthBucket> length_breakdown(const std::vector<RankingResult>& results,
                                           LengthMode mode,
                                           const std::vector<std::size_t>& edges);
std::string breakdown_csv(const std::vector<LengthBucket>& buckets);
std::string breakdown_json(const std::vector<LengthBucket>& buckets);

}  // namespace dialsel
