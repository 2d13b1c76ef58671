#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dialsel/adam.hpp"
#include "dialsel/eval.hpp"

namespace dialsel {

struct TrainConfig {
  double alpha = 1.0;            // auxiliary-loss weight
  double delta = 0.6;            // consistency margin
  double lr = 1e-3;
  std::size_t batch = 32;
  std::size_t max_epochs = 3;
  std::size_t max_steps = 0;     // 0 = bounded by epochs only
  std::size_t patience = 3;      // validations without improvement
  std::size_t eval_interval = 50;
  std::uint64_t seed = 0;
  TaskSet tasks;
  PackLimits limits;
  std::size_t valid_group_size = 0;  // 0 = group validation pairs by context
};

struct StepRecord {
  std::size_t step = 0;  // 1-based
  std::size_t epoch = 0;
  LossBundle losses;
};

struct ValidationRecord {
  std::size_t step = 0;
  double metric = 0.0;  // fraction of validation groups ranked 1
  bool improved = false;
};

struct TrainLog {
  std::vector<StepRecord> steps;
  std::vector<ValidationRecord> validations;
  double best_metric = 0.0;
  std::size_t best_step = 0;
  std::string stop_reason;
};

// Stop once `patience` consecutive metrics fail to strictly improve the
// best seen so far.
bool early_stop_check(const std::vector<double>& history, std::size_t patience);

// Joint training: every step regenerates its batch's task instances from
// (seed, step) substreams, takes one Adam update, and every eval_interval
// steps ranks the validation groups. The model is left holding the
// parameters of the best validation snapshot.
TrainLog train(MatcherModel& model, std::span<const LabeledPair> train_pairs,
               const std::vector<Dialogue>& train_dialogues,
               std::span<const LabeledPair> valid_pairs, const Vocab& vocab,
               const TrainConfig& cfg);

// One JSONL record per step, per validation, plus a summary line. Contains
// no clocks or environment state, so identical runs serialize identically.
void write_trainlog(const std::string& path, const TrainLog& log);

}  // namespace dialsel
