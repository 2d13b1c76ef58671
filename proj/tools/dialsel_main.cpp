// Command-line entrypoint: ingest/validate corpora, build vocabularies,
// dump generated task instances, train, evaluate, and analyze by length.
// Exit codes: 0 ok, 1 data/runtime error, 2 usage error.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "dialsel/eval.hpp"
#include "dialsel/manifest.hpp"
#include "dialsel/synth.hpp"
#include "dialsel/trainer.hpp"
#include "json.hpp"

namespace {

using namespace dialsel;

struct Opts {
  std::string pairs;
  std::string valid_pairs;
  std::string dialogues;
  std::string vocab;
  std::string checkpoint;
  std::string groups;
  std::string out;
  std::string config_path;
  std::uint64_t seed = 0;
  double alpha = 1.0;
  double delta = 0.6;
  double lr = 1e-3;
  double dropout = 0.1;
  std::size_t batch = 32;
  std::size_t max_ctx = 448;
  std::size_t max_resp = 64;
  std::size_t max_len = 512;
  std::string tasks = "nsp,ur,id,cd";
  std::size_t epochs = 3;
  std::size_t max_steps = 0;
  std::size_t patience = 3;
  std::size_t eval_interval = 50;
  std::size_t layers = 2;
  std::size_t heads = 4;
  std::size_t d_model = 64;
  std::size_t d_ff = 256;
  std::size_t group_size = 0;
  std::size_t min_freq = 1;
  std::size_t max_size = 50000;
  std::size_t count = 0;
  std::string mode = "turns";
  std::string edges = "0,4,8,12";
};

// Config file values sit between built-in defaults and explicit flags, so
// they are applied to the option variables before CLI11 parses the real
// command line.
void apply_config_file(Opts& o, const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error(path + ": cannot open config");
  std::stringstream ss;
  ss << is.rdbuf();
  nlohmann::json j = nlohmann::json::parse(ss.str(), nullptr, false);
  if (j.is_discarded() || !j.is_object())
    throw ConfigError(path + ": config must be a JSON object");
  for (auto& [key, value] : j.items()) {
    if (key == "pairs") o.pairs = value.get<std::string>();
    else if (key == "valid-pairs") o.valid_pairs = value.get<std::string>();
    else if (key == "dialogues") o.dialogues = value.get<std::string>();
    else if (key == "vocab") o.vocab = value.get<std::string>();
    else if (key == "checkpoint") o.checkpoint = value.get<std::string>();
    else if (key == "groups") o.groups = value.get<std::string>();
    else if (key == "out") o.out = value.get<std::string>();
    else if (key == "seed") o.seed = value.get<std::uint64_t>();
    else if (key == "alpha") o.alpha = value.get<double>();
    else if (key == "delta") o.delta = value.get<double>();
    else if (key == "lr") o.lr = value.get<double>();
    else if (key == "dropout") o.dropout = value.get<double>();
    else if (key == "batch") o.batch = value.get<std::size_t>();
    else if (key == "max-ctx") o.max_ctx = value.get<std::size_t>();
    else if (key == "max-resp") o.max_resp = value.get<std::size_t>();
    else if (key == "max-len") o.max_len = value.get<std::size_t>();
    else if (key == "tasks") o.tasks = value.get<std::string>();
    else if (key == "epochs") o.epochs = value.get<std::size_t>();
    else if (key == "max-steps") o.max_steps = value.get<std::size_t>();
    else if (key == "patience") o.patience = value.get<std::size_t>();
    else if (key == "eval-interval") o.eval_interval = value.get<std::size_t>();
    else if (key == "layers") o.layers = value.get<std::size_t>();
    else if (key == "heads") o.heads = value.get<std::size_t>();
    else if (key == "d-model") o.d_model = value.get<std::size_t>();
    else if (key == "d-ff") o.d_ff = value.get<std::size_t>();
    else if (key == "group-size") o.group_size = value.get<std::size_t>();
    else if (key == "min-freq") o.min_freq = value.get<std::size_t>();
    else if (key == "max-size") o.max_size = value.get<std::size_t>();
    else if (key == "count") o.count = value.get<std::size_t>();
    else if (key == "mode") o.mode = value.get<std::string>();
    else if (key == "edges") o.edges = value.get<std::string>();
    else throw ConfigError(path + ": unknown config key '" + key + "'");
  }
}

std::string join_args(int argc, char** argv) {
  std::string s;
  for (int i = 0; i < argc; ++i) {
    if (i) s += ' ';
    s += argv[i];
  }
  return s;
}

PackLimits limits_of(const Opts& o) {
  if (o.max_ctx + o.max_resp > o.max_len)
    throw ConfigError("max-ctx + max-resp must fit in max-len");
  return PackLimits{o.max_ctx, o.max_resp, o.max_len};
}

std::vector<std::size_t> parse_edges(const std::string& csv) {
  std::vector<std::size_t> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    std::size_t pos = 0;
    unsigned long long v = std::stoull(item, &pos);
    if (pos != item.size()) throw ConfigError("bad bucket edge '" + item + "'");
    out.push_back(static_cast<std::size_t>(v));
  }
  if (out.empty()) throw ConfigError("no bucket edges given");
  return out;
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream os(path);
  if (!os) throw Error(path + ": cannot open for writing");
  os << text;
  if (!os) throw Error(path + ": write failed");
}

// ---- ingest ----------------------------------------------------------

int cmd_ingest(const Opts& o, const std::string& cmdline) {
  if (o.pairs.empty() && o.dialogues.empty())
    throw ConfigError("ingest: need --pairs and/or --dialogues");
  std::vector<Dialogue> dialogues;
  std::vector<LabeledPair> pairs;
  RunManifest man;
  man.command = cmdline;
  man.seed = o.seed;
  if (!o.dialogues.empty()) {
    dialogues = load_dialogues_jsonl(o.dialogues);
    man.inputs.emplace_back(o.dialogues, digest_file(o.dialogues));
  }
  if (!o.pairs.empty()) {
    pairs = load_pairs_tsv(o.pairs);
    man.inputs.emplace_back(o.pairs, digest_file(o.pairs));
  }
  CorpusStats stats = corpus_stats(dialogues, o.pairs.empty() ? nullptr : &pairs);
  const std::string report = stats_to_json(stats);
  if (o.out.empty()) {
    std::cout << report << '\n';
  } else {
    man.config_json =
        nlohmann::json{{"pairs", o.pairs}, {"dialogues", o.dialogues}}.dump();
    man.outputs = {o.out};
    write_manifest(o.out + ".manifest.json", man);
    write_text_file(o.out, report + "\n");
  }
  return 0;
}

// ---- vocab -----------------------------------------------------------

int cmd_vocab(const Opts& o, const std::string& cmdline) {
  if (o.pairs.empty() && o.dialogues.empty())
    throw ConfigError("vocab: need --pairs and/or --dialogues");
  RunManifest man;
  man.command = cmdline;
  man.seed = o.seed;
  std::vector<Dialogue> dialogues;
  std::vector<LabeledPair> pairs;
  if (!o.dialogues.empty()) {
    dialogues = load_dialogues_jsonl(o.dialogues);
    man.inputs.emplace_back(o.dialogues, digest_file(o.dialogues));
  }
  if (!o.pairs.empty()) {
    pairs = load_pairs_tsv(o.pairs);
    man.inputs.emplace_back(o.pairs, digest_file(o.pairs));
  }
  Vocab vocab = build_vocab(dialogues, pairs, o.min_freq, o.max_size);
  man.config_json =
      nlohmann::json{{"min-freq", o.min_freq}, {"max-size", o.max_size}}.dump();
  man.outputs = {o.out};
  write_manifest(o.out + ".manifest.json", man);
  save_vocab(o.out, vocab);
  std::cout << nlohmann::json{{"vocab_size", vocab.size()}}.dump() << '\n';
  return 0;
}

// ---- gen -------------------------------------------------------------

nlohmann::json packed_json(const PackedSequence& p) {
  return nlohmann::json{{"ids", p.token_ids}, {"segments", p.segment_ids}};
}

int cmd_gen(const Opts& o, const std::string& cmdline) {
  TaskSet tasks = parse_task_set(o.tasks);
  if (!tasks.any()) throw ConfigError("no tasks enabled");
  // generators pack single-budget sequences; the pair budgets don't apply
  const std::size_t max_len = o.max_len;

  std::vector<Dialogue> corpus = load_dialogues_jsonl(o.dialogues);
  RunManifest man;
  man.command = cmdline;
  man.seed = o.seed;
  man.inputs.emplace_back(o.dialogues, digest_file(o.dialogues));
  Vocab vocab;
  if (o.vocab.empty()) {
    vocab = build_vocab(corpus, o.min_freq, o.max_size);
  } else {
    vocab = load_vocab(o.vocab);
    man.inputs.emplace_back(o.vocab, digest_file(o.vocab));
  }
  const std::size_t count = o.count == 0 ? corpus.size() : o.count;
  man.config_json = nlohmann::json{{"tasks", o.tasks},
                                   {"count", count},
                                   {"max-len", o.max_len},
                                   {"vocab_size", vocab.size()}}
                        .dump();
  man.outputs = {o.out};
  write_manifest(o.out + ".manifest.json", man);

  std::ofstream os(o.out);
  if (!os) throw Error(o.out + ": cannot open for writing");
  auto emit = [&os](nlohmann::json j) { os << j.dump() << '\n'; };
  auto run_task = [&](Task task, bool enabled, auto&& gen_one) {
    if (!enabled) return;
    for (std::size_t i = 0; i < count; ++i) {
      const Dialogue& d = corpus[i % corpus.size()];
      Rng rng(mix_seed({o.seed, static_cast<std::uint64_t>(task), 0, i}));
      nlohmann::json j{{"task", task_name(task)}, {"index", i}, {"dialogue", d.id}};
      try {
        gen_one(d, rng, j);
      } catch (const Error& e) {
        j["error"] = e.what();
      }
      emit(std::move(j));
    }
  };
  run_task(Task::nsp, tasks.nsp, [&](const Dialogue& d, Rng& rng, nlohmann::json& j) {
    NspInstance inst = gen_nsp(d, corpus, rng, vocab, max_len);
    j.update(packed_json(inst.packed));
    j["label"] = inst.label;
    j["split_point"] = inst.split_point;
    j["replaced_side"] = inst.replaced_side == NspInstance::Side::none  ? "none"
                         : inst.replaced_side == NspInstance::Side::left ? "left"
                                                                         : "right";
    j["donor"] = inst.donor_id;
  });
  run_task(Task::ur, tasks.ur, [&](const Dialogue& d, Rng& rng, nlohmann::json& j) {
    UrInstance inst = gen_ur(d, rng, vocab, max_len);
    j.update(packed_json(inst.packed));
    j["masked_turn"] = inst.masked_turn;
    j["targets"] = inst.target_ids;
  });
  run_task(Task::id, tasks.id, [&](const Dialogue& d, Rng& rng, nlohmann::json& j) {
    IdInstance inst = gen_id(d, corpus, rng, vocab, max_len);
    j.update(packed_json(inst.packed));
    j["z"] = inst.z;
    j["replaced_turn"] = inst.replaced_turn;
    j["donor"] = inst.donor_id;
  });
  run_task(Task::cd, tasks.cd, [&](const Dialogue& d, Rng& rng, nlohmann::json& j) {
    CdInstance inst = gen_cd(d, corpus, rng, vocab, max_len);
    j["pos"] = packed_json(inst.packed_pos);
    j["neg"] = packed_json(inst.packed_neg);
    j["turn_i"] = inst.turn_i;
    j["turn_j"] = inst.turn_j;
    j["donor"] = inst.donor_id;
  });
  if (!os) throw Error(o.out + ": write failed");
  return 0;
}

// ---- train -----------------------------------------------------------

int cmd_train(const Opts& o, const std::string& cmdline) {
  const PackLimits limits = limits_of(o);
  std::vector<LabeledPair> train_pairs = load_pairs_tsv(o.pairs);
  std::vector<LabeledPair> valid_pairs = load_pairs_tsv(o.valid_pairs);
  std::vector<Dialogue> dialogues;

  RunManifest man;
  man.command = cmdline;
  man.seed = o.seed;
  man.inputs.emplace_back(o.pairs, digest_file(o.pairs));
  man.inputs.emplace_back(o.valid_pairs, digest_file(o.valid_pairs));
  if (!o.dialogues.empty()) {
    dialogues = load_dialogues_jsonl(o.dialogues);
    man.inputs.emplace_back(o.dialogues, digest_file(o.dialogues));
  }
  Vocab vocab;
  if (o.vocab.empty()) {
    vocab = build_vocab(dialogues, train_pairs, o.min_freq, o.max_size);
  } else {
    vocab = load_vocab(o.vocab);
    man.inputs.emplace_back(o.vocab, digest_file(o.vocab));
  }

  EncoderConfig enc;
  enc.layers = o.layers;
  enc.heads = o.heads;
  enc.d_model = o.d_model;
  enc.d_ff = o.d_ff;
  enc.vocab_size = vocab.size();
  enc.max_len = o.max_len;
  enc.dropout = o.dropout;

  TrainConfig tc;
  tc.alpha = o.alpha;
  tc.delta = o.delta;
  tc.lr = o.lr;
  tc.batch = o.batch;
  tc.max_epochs = o.epochs;
  tc.max_steps = o.max_steps;
  tc.patience = o.patience;
  tc.eval_interval = o.eval_interval;
  tc.seed = o.seed;
  tc.tasks = parse_task_set(o.tasks);
  tc.limits = limits;
  tc.valid_group_size = o.group_size;

  std::filesystem::create_directories(o.out);
  const std::string model_path = o.out + "/model.ckpt";
  const std::string log_path = o.out + "/trainlog.jsonl";
  const std::string vocab_path = o.out + "/vocab.txt";
  const std::string metrics_path = o.out + "/metrics.json";
  man.config_json = nlohmann::json{{"alpha", o.alpha},
                                   {"delta", o.delta},
                                   {"lr", o.lr},
                                   {"dropout", o.dropout},
                                   {"batch", o.batch},
                                   {"epochs", o.epochs},
                                   {"max-steps", o.max_steps},
                                   {"patience", o.patience},
                                   {"eval-interval", o.eval_interval},
                                   {"tasks", o.tasks},
                                   {"max-ctx", o.max_ctx},
                                   {"max-resp", o.max_resp},
                                   {"max-len", o.max_len},
                                   {"layers", o.layers},
                                   {"heads", o.heads},
                                   {"d-model", o.d_model},
                                   {"d-ff", o.d_ff},
                                   {"group-size", o.group_size},
                                   {"vocab_size", vocab.size()}}
                        .dump();
  man.outputs = {model_path, model_path + ".json", log_path, vocab_path, metrics_path};
  write_manifest(o.out + "/manifest.json", man);

  MatcherModel model(enc, o.seed);
  TrainLog log = train(model, train_pairs, dialogues, valid_pairs, vocab, tc);

  save_vocab(vocab_path, vocab);
  model.save(model_path);
  write_trainlog(log_path, log);
  nlohmann::json summary{{"best_metric", log.best_metric},
                         {"best_step", log.best_step},
                         {"steps", log.steps.size()},
                         {"validations", log.validations.size()},
                         {"stop_reason", log.stop_reason}};
  write_text_file(metrics_path, summary.dump(2) + "\n");
  std::cout << summary.dump() << '\n';
  return 0;
}

// ---- eval / analyze ----------------------------------------------------

std::vector<RankingResult> rank_all(const Opts& o, const PackLimits& limits,
                                    const MatcherModel& model, const Vocab& vocab,
                                    const std::vector<LabeledPair>& pairs) {
  std::vector<CandidateGroup> groups = group_pairs(pairs, o.group_size);
  std::vector<RankingResult> results;
  results.reserve(groups.size());
  for (const CandidateGroup& g : groups)
    results.push_back(rank_group(model, g, vocab, limits));
  return results;
}

int cmd_eval(const Opts& o, const std::string& cmdline) {
  const PackLimits limits = limits_of(o);
  std::vector<LabeledPair> pairs = load_pairs_tsv(o.groups);
  MatcherModel model = MatcherModel::load(o.checkpoint);
  Vocab vocab = load_vocab(o.vocab);
  std::vector<RankingResult> results = rank_all(o, limits, model, vocab, pairs);
  const std::string report = metric_report_json(make_metric_report(results));
  if (!o.out.empty()) {
    RunManifest man;
    man.command = cmdline;
    man.seed = o.seed;
    man.inputs.emplace_back(o.groups, digest_file(o.groups));
    man.inputs.emplace_back(o.checkpoint, digest_file(o.checkpoint));
    man.inputs.emplace_back(o.vocab, digest_file(o.vocab));
    man.config_json = nlohmann::json{{"group-size", o.group_size},
                                     {"max-ctx", o.max_ctx},
                                     {"max-resp", o.max_resp}}
                          .dump();
    man.outputs = {o.out};
    write_manifest(o.out + ".manifest.json", man);
    write_text_file(o.out, report + "\n");
  }
  std::cout << report << '\n';
  return 0;
}

int cmd_analyze(const Opts& o, const std::string& cmdline) {
  const PackLimits limits = limits_of(o);
  const LengthMode mode = length_mode_from_string(o.mode);
  const std::vector<std::size_t> edges = parse_edges(o.edges);
  std::vector<LabeledPair> pairs = load_pairs_tsv(o.groups);
  MatcherModel model = MatcherModel::load(o.checkpoint);
  Vocab vocab = load_vocab(o.vocab);
  std::vector<RankingResult> results = rank_all(o, limits, model, vocab, pairs);
  std::vector<LengthBucket> buckets = length_breakdown(results, mode, edges);
  const std::string csv = breakdown_csv(buckets);
  if (!o.out.empty()) {
    RunManifest man;
    man.command = cmdline;
    man.seed = o.seed;
    man.inputs.emplace_back(o.groups, digest_file(o.groups));
    man.inputs.emplace_back(o.checkpoint, digest_file(o.checkpoint));
    man.inputs.emplace_back(o.vocab, digest_file(o.vocab));
    man.config_json =
        nlohmann::json{{"mode", o.mode}, {"edges", o.edges}, {"group-size", o.group_size}}
            .dump();
    man.outputs = {o.out};
    write_manifest(o.out + ".manifest.json", man);
    write_text_file(o.out, csv);
    std::cout << breakdown_json(buckets) << '\n';
  } else {
    std::cout << csv;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  Opts o;
  // The config file must be applied before parsing so explicit flags win.
  for (int i = 1; i < argc; ++i) {
    std::string arg = argv[i];
    if (arg == "--config" && i + 1 < argc) o.config_path = argv[i + 1];
    else if (arg.rfind("--config=", 0) == 0) o.config_path = arg.substr(9);
  }

  CLI::App app{"dialogue response selection pipeline"};
  app.set_version_flag("--version", kToolVersion);
  app.require_subcommand(1);

  try {
    if (!o.config_path.empty()) apply_config_file(o, o.config_path);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--seed", o.seed, "rng seed");
    cmd->add_option("--config", o.config_path, "JSON config file (defaults < config < flags)");
  };
  auto add_limits = [&](CLI::App* cmd) {
    cmd->add_option("--max-ctx", o.max_ctx, "context token budget");
    cmd->add_option("--max-resp", o.max_resp, "response token budget");
    cmd->add_option("--max-len", o.max_len, "packed sequence cap");
  };

  CLI::App* ingest = app.add_subcommand("ingest", "validate corpora and report stats");
  ingest->add_option("--pairs", o.pairs, "labeled pairs TSV");
  ingest->add_option("--dialogues", o.dialogues, "dialogues JSONL");
  ingest->add_option("--out", o.out, "stats JSON path (default stdout)");
  add_common(ingest);

  CLI::App* vocab = app.add_subcommand("vocab", "build a vocabulary");
  vocab->add_option("--pairs", o.pairs, "labeled pairs TSV");
  vocab->add_option("--dialogues", o.dialogues, "dialogues JSONL");
  vocab->add_option("--out", o.out, "vocabulary path")->required();
  vocab->add_option("--min-freq", o.min_freq, "minimum token frequency");
  vocab->add_option("--max-size", o.max_size, "vocabulary cap, reserved included");
  add_common(vocab);

  CLI::App* gen = app.add_subcommand("gen", "dump generated task instances");
  gen->add_option("--dialogues", o.dialogues, "dialogues JSONL")->required();
  gen->add_option("--vocab", o.vocab, "vocabulary (default: built from input)");
  gen->add_option("--tasks", o.tasks, "comma list of nsp,ur,id,cd");
  gen->add_option("--count", o.count, "instances per task (default: corpus size)");
  gen->add_option("--out", o.out, "output JSONL path")->required();
  gen->add_option("--min-freq", o.min_freq, "vocab min frequency");
  gen->add_option("--max-size", o.max_size, "vocab cap");
  add_limits(gen);
  add_common(gen);

  CLI::App* train = app.add_subcommand("train", "train a matching model");
  train->add_option("--pairs", o.pairs, "training pairs TSV")->required();
  train->add_option("--valid-pairs", o.valid_pairs, "validation pairs TSV")->required();
  train->add_option("--dialogues", o.dialogues, "dialogue corpus JSONL (auxiliary donors)");
  train->add_option("--vocab", o.vocab, "vocabulary (default: built from inputs)");
  train->add_option("--out", o.out, "output directory")->required();
  train->add_option("--alpha", o.alpha, "auxiliary loss weight");
  train->add_option("--delta", o.delta, "consistency margin");
  train->add_option("--lr", o.lr, "learning rate");
  train->add_option("--dropout", o.dropout, "dropout probability");
  train->add_option("--batch", o.batch, "pairs per step");
  train->add_option("--epochs", o.epochs, "max epochs");
  train->add_option("--max-steps", o.max_steps, "hard step cap (0 = none)");
  train->add_option("--patience", o.patience, "validations without improvement");
  train->add_option("--eval-interval", o.eval_interval, "steps between validations");
  train->add_option("--tasks", o.tasks, "enabled auxiliary tasks");
  train->add_option("--layers", o.layers, "encoder layers");
  train->add_option("--heads", o.heads, "attention heads");
  train->add_option("--d-model", o.d_model, "model width");
  train->add_option("--d-ff", o.d_ff, "feed-forward width");
  train->add_option("--group-size", o.group_size, "validation group size (0 = by context)");
  train->add_option("--min-freq", o.min_freq, "vocab min frequency");
  train->add_option("--max-size", o.max_size, "vocab cap");
  add_limits(train);
  add_common(train);

  CLI::App* eval = app.add_subcommand("eval", "rank candidate groups and report metrics");
  eval->add_option("--groups", o.groups, "candidate pairs TSV")->required();
  eval->add_option("--checkpoint", o.checkpoint, "model checkpoint")->required();
  eval->add_option("--vocab", o.vocab, "vocabulary")->required();
  eval->add_option("--group-size", o.group_size, "candidates per group (0 = by context)");
  eval->add_option("--out", o.out, "also write the JSON report here");
  add_limits(eval);
  add_common(eval);

  CLI::App* analyze = app.add_subcommand("analyze", "metrics bucketed by context length");
  analyze->add_option("--groups", o.groups, "candidate pairs TSV")->required();
  analyze->add_option("--checkpoint", o.checkpoint, "model checkpoint")->required();
  analyze->add_option("--vocab", o.vocab, "vocabulary")->required();
  analyze->add_option("--group-size", o.group_size, "candidates per group (0 = by context)");
  analyze->add_option("--mode", o.mode, "bucket by 'turns' or 'tokens'");
  analyze->add_option("--edges", o.edges, "comma list of bucket lower edges");
  analyze->add_option("--out", o.out, "CSV path (default stdout)");
  add_limits(analyze);
  add_common(analyze);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  const std::string cmdline = join_args(argc, argv);
  try {
    if (ingest->parsed()) return cmd_ingest(o, cmdline);
    if (vocab->parsed()) return cmd_vocab(o, cmdline);
    if (gen->parsed()) return cmd_gen(o, cmdline);
    if (train->parsed()) return cmd_train(o, cmdline);
    if (eval->parsed()) return cmd_eval(o, cmdline);
    if (analyze->parsed()) return cmd_analyze(o, cmdline);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
