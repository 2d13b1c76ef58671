#include "dialsel/eval.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "json.hpp"

namespace dialsel {

namespace {

std::string context_key(const Dialogue& d) {
  std::string key;
  for (const Utterance& u : d.utterances) {
    key += u.text;
    key += '\x1f';
  }
  return key;
}

CandidateGroup finish_group(std::span<const LabeledPair> pairs, std::size_t begin,
                            std::size_t end, std::size_t group_index) {
  CandidateGroup g;
  g.context = pairs[begin].context;
  g.context_id = g.context.id.empty() ? "g" + std::to_string(group_index) : g.context.id;
  std::size_t positives = 0;
  for (std::size_t i = begin; i < end; ++i) {
    g.candidates.push_back(pairs[i].response);
    if (pairs[i].label == 1) {
      g.positive_index = i - begin;
      ++positives;
    }
  }
  if (positives != 1)
    throw Error("group " + g.context_id + ": " + std::to_string(positives) +
                " positives, need exactly 1");
  return g;
}

}  // namespace

std::vector<CandidateGroup> group_pairs(std::span<const LabeledPair> pairs,
                                        std::size_t group_size) {
  if (pairs.empty()) throw Error("group_pairs: no pairs");
  std::vector<CandidateGroup> out;
  if (group_size == 0) {
    std::size_t begin = 0;
    std::string key = context_key(pairs[0].context);
    for (std::size_t i = 1; i <= pairs.size(); ++i) {
      std::string next = i < pairs.size() ? context_key(pairs[i].context) : std::string();
      if (i == pairs.size() || next != key) {
        out.push_back(finish_group(pairs, begin, i, out.size()));
        begin = i;
        key = std::move(next);
      }
    }
    return out;
  }
  if (pairs.size() % group_size != 0)
    throw Error("group_pairs: " + std::to_string(pairs.size()) +
                " pairs do not divide into groups of " + std::to_string(group_size));
  for (std::size_t begin = 0; begin < pairs.size(); begin += group_size)
    out.push_back(finish_group(pairs, begin, begin + group_size, out.size()));
  return out;
}

std::size_t rank_of(const std::vector<double>& scores, std::size_t positive) {
  if (positive >= scores.size()) throw Error("rank_of: positive index out of range");
  const double pos = scores[positive];
  std::size_t rank = 1;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (scores[i] > pos) ++rank;
    if (i < positive && scores[i] == pos) ++rank;
  }
  return rank;
}

RankingResult rank_group(const MatcherModel& model, const CandidateGroup& group,
                         const Vocab& vocab, const PackLimits& limits) {
  if (group.candidates.empty()) throw Error("rank_group: empty candidate list");
  if (group.positive_index >= group.candidates.size())
    throw Error("rank_group: positive index out of range");
  RankingResult r;
  r.context_id = group.context_id;
  r.positive_index = group.positive_index;
  r.turns = group.context.turns();
  for (const Utterance& u : group.context.utterances)
    r.context_tokens += tokenize(u.text).size();
  r.scores.reserve(group.candidates.size());
  for (const Utterance& cand : group.candidates) {
    PackedSequence packed = pack_context_response(group.context, cand, vocab,
                                                  limits.max_ctx, limits.max_resp);
    r.scores.push_back(score_pair(model, packed));
  }
  r.rank = rank_of(r.scores, r.positive_index);
  return r;
}

double recall_at_k(const std::vector<RankingResult>& results, std::size_t n,
                   std::size_t k) {
  if (results.empty()) throw Error("recall_at_k: no groups");
  if (k == 0 || k > n) throw Error("recall_at_k: need 1 <= k <= n");
  std::size_t hits = 0;
  for (const RankingResult& r : results) {
    if (r.scores.size() != n)
      throw Error("recall_at_k: group " + r.context_id + " has " +
                  std::to_string(r.scores.size()) + " candidates, expected " +
                  std::to_string(n));
    if (r.rank <= k) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(results.size());
}

MetricReport make_metric_report(const std::vector<RankingResult>& results) {
  MetricReport rep;
  std::vector<RankingResult> n2, n10;
  for (const RankingResult& r : results) {
    if (r.scores.size() == 2)
      n2.push_back(r);
    else if (r.scores.size() == 10)
      n10.push_back(r);
    else
      ++rep.groups_other;
  }
  rep.groups_n2 = n2.size();
  rep.groups_n10 = n10.size();
  if (!n2.empty()) rep.r2_at_1 = recall_at_k(n2, 2, 1);
  if (!n10.empty()) {
    rep.r10_at_1 = recall_at_k(n10, 10, 1);
    rep.r10_at_2 = recall_at_k(n10, 10, 2);
    rep.r10_at_5 = recall_at_k(n10, 10, 5);
  }
  return rep;
}

namespace {

nlohmann::json metric_json_value(const std::optional<double>& m) {
  if (!m) return nullptr;
  return *m;
}

nlohmann::json report_to_json(const MetricReport& r) {
  nlohmann::json j;
  j["R_2@1"] = metric_json_value(r.r2_at_1);
  j["R_10@1"] = metric_json_value(r.r10_at_1);
  j["R_10@2"] = metric_json_value(r.r10_at_2);
  j["R_10@5"] = metric_json_value(r.r10_at_5);
  j["groups"] = {{"n2", r.groups_n2}, {"n10", r.groups_n10}, {"other", r.groups_other}};
  return j;
}

std::string metric_cell(const std::optional<double>& m) {
  if (!m) return "n/a";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4f", *m);
  return buf;
}

}  // namespace

std::string metric_report_json(const MetricReport& report) {
  return report_to_json(report).dump(2);
}

std::string metric_report_table(const MetricReport& report) {
  std::ostringstream os;
  auto row = [&os](const std::string& name, const std::string& value,
                   const std::string& groups) {
    os << name;
    os << std::string(name.size() < 8 ? 8 - name.size() : 1, ' ');
    os << value;
    os << std::string(value.size() < 10 ? 10 - value.size() : 1, ' ');
    os << groups << '\n';
  };
  row("metric", "value", "groups");
  row("R_2@1", metric_cell(report.r2_at_1), std::to_string(report.groups_n2));
  row("R_10@1", metric_cell(report.r10_at_1), std::to_string(report.groups_n10));
  row("R_10@2", metric_cell(report.r10_at_2), std::to_string(report.groups_n10));
  row("R_10@5", metric_cell(report.r10_at_5), std::to_string(report.groups_n10));
  return os.str();
}

LengthMode length_mode_from_string(const std::string& name) {
  if (name == "turns") return LengthMode::turns;
  if (name == "tokens") return LengthMode::tokens;
  throw ConfigError("length mode must be 'turns' or 'tokens', got '" + name + "'");
}

std::vector<LengthBucket> length_breakdown(const std::vector<RankingResult>& results,
                                           LengthMode mode,
                                           const std::vector<std::size_t>& edges) {
  if (edges.empty()) throw Error("length_breakdown: no bucket edges");
  for (std::size_t i = 1; i < edges.size(); ++i)
    if (edges[i] <= edges[i - 1])
      throw Error("length_breakdown: bucket edges must be strictly increasing");

  std::vector<LengthBucket> buckets(edges.size());
  for (std::size_t i = 0; i < edges.size(); ++i) {
    buckets[i].lo = edges[i];
    if (i + 1 < edges.size()) buckets[i].hi = edges[i + 1];
  }
  std::vector<std::vector<RankingResult>> members(buckets.size());
  for (const RankingResult& r : results) {
    const std::size_t value = mode == LengthMode::turns ? r.turns : r.context_tokens;
    if (value < edges.front())
      throw Error("length_breakdown: group " + r.context_id + " has length " +
                  std::to_string(value) + " below the first bucket edge");
    std::size_t b = buckets.size() - 1;
    while (b > 0 && value < edges[b]) --b;
    members[b].push_back(r);
  }
  for (std::size_t i = 0; i < buckets.size(); ++i) {
    buckets[i].group_count = members[i].size();
    if (!members[i].empty()) buckets[i].report = make_metric_report(members[i]);
  }
  return buckets;
}

std::string breakdown_csv(const std::vector<LengthBucket>& buckets) {
  std::ostringstream os;
  os << "bucket_lo,bucket_hi,groups,r2_at_1,r10_at_1,r10_at_2,r10_at_5\n";
  auto cell = [](const std::optional<double>& m) {
    if (!m) return std::string();
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6f", *m);
    return std::string(buf);
  };
  for (const LengthBucket& b : buckets) {
    os << b.lo << ',' << (b.hi ? std::to_string(*b.hi) : "inf") << ','
       << b.group_count << ',' << cell(b.report.r2_at_1) << ','
       << cell(b.report.r10_at_1) << ',' << cell(b.report.r10_at_2) << ','
       << cell(b.report.r10_at_5) << '\n';
  }
  return os.str();
}

std::string breakdown_json(const std::vector<LengthBucket>& buckets) {
  nlohmann::json arr = nlohmann::json::array();
  for (const LengthBucket& b : buckets) {
    nlohmann::json j;
    j["lo"] = b.lo;
    j["hi"] = b.hi ? nlohmann::json(*b.hi) : nlohmann::json(nullptr);
    j["groups"] = b.group_count;
    j["report"] = report_to_json(b.report);
    arr.push_back(std::move(j));
  }
  return arr.dump(2);
}

}  // namespace dialsel
