// Generates a synthetic planted-structure corpus plus train/valid/test
// splits, for smoke tests and the directional multi-task experiment.

#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "dialsel/manifest.hpp"
#include "dialsel/synth.hpp"
#include "json.hpp"

using namespace dialsel;

namespace {

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream os(path);
  if (!os) throw Error(path + ": cannot open for writing");
  os << text;
  if (!os) throw Error(path + ": write failed");
}

}  // namespace

int main(int argc, char** argv) {
  SynthConfig cfg;
  std::size_t train_contexts = 400;
  std::size_t valid_contexts = 50;
  std::size_t test_contexts = 100;
  std::size_t group_size = 10;
  std::string out;

  CLI::App app{"synthetic dialogue corpus generator"};
  app.set_version_flag("--version", kToolVersion);
  app.add_option("--dialogues", cfg.dialogues, "number of dialogues");
  app.add_option("--topics", cfg.topics, "topic pools");
  app.add_option("--topic-words", cfg.topic_words, "words per topic pool");
  app.add_option("--styles", cfg.styles, "speaker style tokens");
  app.add_option("--fillers", cfg.fillers, "filler tokens");
  app.add_option("--min-turns", cfg.min_turns, "minimum turns per dialogue");
  app.add_option("--max-turns", cfg.max_turns, "maximum turns per dialogue");
  app.add_option("--seed", cfg.seed, "rng seed");
  app.add_option("--train-contexts", train_contexts, "training contexts (2 pairs each)");
  app.add_option("--valid-contexts", valid_contexts, "validation groups");
  app.add_option("--test-contexts", test_contexts, "test groups");
  app.add_option("--group-size", group_size, "candidates per held-out group");
  app.add_option("--out", out, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    std::vector<Dialogue> corpus = synth_dialogues(cfg);
    SynthSplit split = synth_split(corpus, train_contexts, valid_contexts,
                                   test_contexts, group_size, cfg.seed);
    std::filesystem::create_directories(out);
    RunManifest man;
    man.command = [&] {
      std::string s;
      for (int i = 0; i < argc; ++i) {
        if (i) s += ' ';
        s += argv[i];
      }
      return s;
    }();
    man.seed = cfg.seed;
    man.config_json = nlohmann::json{{"dialogues", cfg.dialogues},
                                     {"topics", cfg.topics},
                                     {"topic-words", cfg.topic_words},
                                     {"styles", cfg.styles},
                                     {"fillers", cfg.fillers},
                                     {"min-turns", cfg.min_turns},
                                     {"max-turns", cfg.max_turns},
                                     {"train-contexts", train_contexts},
                                     {"valid-contexts", valid_contexts},
                                     {"test-contexts", test_contexts},
                                     {"group-size", group_size}}
                          .dump();
    man.outputs = {out + "/dialogues.jsonl", out + "/train_pairs.tsv",
                   out + "/valid_pairs.tsv", out + "/test_pairs.tsv"};
    write_manifest(out + "/manifest.json", man);
    write_text_file(out + "/dialogues.jsonl", serialize_dialogues_jsonl(corpus));
    write_text_file(out + "/train_pairs.tsv", serialize_pairs_tsv(split.train_pairs));
    write_text_file(out + "/valid_pairs.tsv", serialize_pairs_tsv(split.valid_pairs));
    write_text_file(out + "/test_pairs.tsv", serialize_pairs_tsv(split.test_pairs));
    std::cout << nlohmann::json{{"dialogues", corpus.size()},
                                {"train_pairs", split.train_pairs.size()},
                                {"valid_pairs", split.valid_pairs.size()},
                                {"test_pairs", split.test_pairs.size()}}
                     .dump()
              << '\n';
    return 0;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
