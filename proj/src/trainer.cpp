#include "dialsel/trainer.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace dialsel {

namespace {

constexpr std::uint64_t kShuffleStream = 0x5afe;

void validate(const TrainConfig& cfg) {
  if (cfg.alpha < 0.0) throw ConfigError("train: alpha must be >= 0");
  if (cfg.delta < 0.0) throw ConfigError("train: delta must be >= 0");
  if (!(cfg.lr > 0.0)) throw ConfigError("train: lr must be positive");
  if (cfg.batch == 0) throw ConfigError("train: batch must be >= 1");
  if (cfg.patience == 0) throw ConfigError("train: patience must be >= 1");
  if (cfg.max_epochs == 0) throw ConfigError("train: max_epochs must be >= 1");
  if (cfg.eval_interval == 0) throw ConfigError("train: eval_interval must be >= 1");
}

double validation_metric(const MatcherModel& model,
                         const std::vector<CandidateGroup>& groups,
                         const Vocab& vocab, const PackLimits& limits) {
  std::size_t hits = 0;
  for (const CandidateGroup& g : groups)
    if (rank_group(model, g, vocab, limits).rank == 1) ++hits;
  return static_cast<double>(hits) / static_cast<double>(groups.size());
}

std::string bundle_summary(const LossBundle& b) {
  std::ostringstream os;
  os << "l_final=" << b.l_final << " l_crm=" << b.l_crm << " l_nsp=" << b.l_nsp
     << " l_ur=" << b.l_ur << " l_id=" << b.l_id << " l_cd=" << b.l_cd;
  return os.str();
}

}  // namespace

bool early_stop_check(const std::vector<double>& history, std::size_t patience) {
  if (history.empty()) throw Error("early_stop_check: empty history");
  if (patience == 0) throw Error("early_stop_check: patience must be >= 1");
  double best = -1.0;
  std::size_t stale = 0;
  for (double m : history) {
    if (m > best) {
      best = m;
      stale = 0;
    } else {
      ++stale;
    }
  }
  return stale >= patience;
}

TrainLog train(MatcherModel& model, std::span<const LabeledPair> train_pairs,
               const std::vector<Dialogue>& train_dialogues,
               std::span<const LabeledPair> valid_pairs, const Vocab& vocab,
               const TrainConfig& cfg) {
  validate(cfg);
  if (train_pairs.empty()) throw Error("train: no training pairs");
  if (valid_pairs.empty()) throw Error("train: no validation pairs");
  const std::vector<CandidateGroup> valid_groups =
      group_pairs(valid_pairs, cfg.valid_group_size);

  // With the auxiliary weight at zero the extra instances cannot influence
  // the gradients, so skip generating them entirely.
  TaskSet tasks = cfg.alpha == 0.0 ? TaskSet{false, false, false, false} : cfg.tasks;

  TrainLog log;
  AdamState adam(AdamConfig{cfg.lr, 0.9, 0.999, 1e-8}, model.params());
  std::vector<Tensor> grads;
  std::vector<double> metric_history;
  std::vector<Tensor> best_snapshot;
  std::size_t step = 0;
  bool stopping = false;

  auto run_validation = [&] {
    const double metric = validation_metric(model, valid_groups, vocab, cfg.limits);
    const bool improved = metric > log.best_metric || log.validations.empty();
    if (improved) {
      log.best_metric = metric;
      log.best_step = step;
      best_snapshot.clear();
      for (Tensor* p : model.params()) best_snapshot.push_back(*p);
    }
    log.validations.push_back({step, metric, improved});
    metric_history.push_back(metric);
    if (early_stop_check(metric_history, cfg.patience)) {
      if (log.stop_reason.empty())
        log.stop_reason = "early stop: " + std::to_string(cfg.patience) +
                          " validations without improvement";
      stopping = true;
    }
  };

  for (std::size_t epoch = 1; epoch <= cfg.max_epochs && !stopping; ++epoch) {
    std::vector<std::size_t> order(train_pairs.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng shuffle_rng(mix_seed({cfg.seed, kShuffleStream, epoch}));
    for (std::size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[shuffle_rng.uniform_index(i)]);

    for (std::size_t begin = 0; begin < order.size() && !stopping;
         begin += cfg.batch) {
      const std::size_t end = std::min(begin + cfg.batch, order.size());
      std::vector<LabeledPair> batch_pairs;
      batch_pairs.reserve(end - begin);
      for (std::size_t i = begin; i < end; ++i)
        batch_pairs.push_back(train_pairs[order[i]]);

      ++step;
      Batch batch = make_training_batch(batch_pairs, train_dialogues, cfg.seed, step,
                                        vocab, tasks, cfg.limits);
      LossBundle losses = batch_loss_and_grads(model, batch, cfg.alpha, cfg.delta,
                                               cfg.seed, step, /*train_mode=*/true,
                                               &grads);
      if (!std::isfinite(losses.l_final))
        throw Error("train: non-finite loss at step " + std::to_string(step) + " (" +
                    bundle_summary(losses) + ")");
      adam_step(model.params(), grads, adam);
      log.steps.push_back({step, epoch, losses});

      if (step % cfg.eval_interval == 0) run_validation();
      if (cfg.max_steps != 0 && step >= cfg.max_steps && !stopping) {
        log.stop_reason = "reached max_steps";
        stopping = true;
      }
    }
  }
  if (log.stop_reason.empty()) log.stop_reason = "reached max_epochs";

  // Make sure the final parameters were measured at least once.
  if (log.validations.empty() || log.validations.back().step != step)
    run_validation();

  auto params = model.params();
  for (std::size_t i = 0; i < params.size(); ++i) *params[i] = best_snapshot[i];
  return log;
}

void write_trainlog(const std::string& path, const TrainLog& log) {
  std::ofstream os(path);
  if (!os) throw Error(path + ": cannot open for writing");
  for (const StepRecord& s : log.steps) {
    nlohmann::json j;
    j["type"] = "step";
    j["step"] = s.step;
    j["epoch"] = s.epoch;
    j["l_crm"] = s.losses.l_crm;
    j["l_nsp"] = s.losses.l_nsp;
    j["l_ur"] = s.losses.l_ur;
    j["l_id"] = s.losses.l_id;
    j["l_cd"] = s.losses.l_cd;
    j["l_final"] = s.losses.l_final;
    j["n_crm"] = s.losses.n_crm;
    j["n_nsp"] = s.losses.n_nsp;
    j["n_ur"] = s.losses.n_ur;
    j["n_id"] = s.losses.n_id;
    j["n_cd"] = s.losses.n_cd;
    os << j.dump() << '\n';
  }
  for (const ValidationRecord& v : log.validations) {
    nlohmann::json j;
    j["type"] = "validation";
    j["step"] = v.step;
    j["metric"] = v.metric;
    j["improved"] = v.improved;
    os << j.dump() << '\n';
  }
  nlohmann::json j;
  j["type"] = "summary";
  j["best_step"] = log.best_step;
  j["best_metric"] = log.best_metric;
  j["stop_reason"] = log.stop_reason;
  j["steps"] = log.steps.size();
  os << j.dump() << '\n';
  if (!os) throw Error(path + ": write failed");
}

}  // namespace dialsel
