// Command-line entry point: preprocess, pretrain-classifier, train, generate,
// evaluate.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rqa/error.h"
#include "rqa/pipeline.h"

namespace {

constexpr int kUsageError = 2;
constexpr int kContractError = 3;
constexpr int kIoError = 4;
constexpr int kFormatError = 5;
constexpr int kTrainingError = 6;

struct CommonFlags {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> overrides;
};

void AddCommon(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("--config", flags.config_path, "key=value config file");
  cmd->add_option("--seed", flags.seed, "seed for all randomness");
  cmd->add_option("--set", flags.overrides, "config override key=value (repeatable)");
}

// Defaults, then the config file, then dedicated flags, then --set.
rqa::TrainConfig Resolve(const CommonFlags& flags,
                         const std::map<std::string, std::string>& dedicated) {
  rqa::TrainConfig config;
  if (!flags.config_path.empty()) config = rqa::TrainConfig::Load(flags.config_path);
  if (flags.seed) config.seed = *flags.seed;
  for (const auto& [k, v] : dedicated) config.Set(k, v);
  for (const std::string& kv : flags.overrides) config.Apply(kv);
  config.Validate();
  return config;
}

void LogConfig(const std::string& command, const rqa::TrainConfig& config) {
  std::cerr << "# " << command << " resolved config\n" << config.Serialize();
}

std::map<std::string, std::string> ParsePairs(const std::vector<std::string>& items) {
  std::map<std::string, std::string> out;
  for (const std::string& item : items) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) {
      throw rqa::ContractViolation("expected key=path, got '" + item + "'");
    }
    out[item.substr(0, eq)] = item.substr(eq + 1);
  }
  return out;
}

std::vector<std::string> SplitList(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : text) {
    if (c == ',') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

void WriteText(const std::string& path, const std::string& text) {
  std::ofstream f(path);
  f << text;
  if (!f) throw rqa::IoError("cannot write " + path);
}

rqa::PosLexicon LoadLexicon(const std::string& dir) {
  return dir.empty() ? rqa::PosLexicon::Default() : rqa::PosLexicon::LoadDir(dir);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Rating-conditioned review answer generation"};
  app.require_subcommand(1);

  CommonFlags common;
  std::string data, out, lexicon_dir, classifier, model_path, item, question;
  std::string variant, systems = "random,nn-rating", split = "test";
  std::vector<std::string> models;
  std::optional<int> rating;
  std::string lambda;
  std::optional<std::size_t> beam, max_len;

  auto* pre = app.add_subcommand("preprocess", "ingest reviews and write shards");
  pre->add_option("--data", data, "line-delimited JSON reviews")->required();
  pre->add_option("--out", out, "output data directory")->required();
  pre->add_option("--lexicon", lexicon_dir, "directory with words.tsv and suffixes.tsv");
  AddCommon(pre, common);

  auto* pretrain = app.add_subcommand("pretrain-classifier", "pretrain the rating classifier");
  pretrain->add_option("--data", data, "preprocessed data directory")->required();
  pretrain->add_option("--out", out, "classifier checkpoint path")->required();
  AddCommon(pretrain, common);

  auto* train = app.add_subcommand("train", "train the answer generator");
  train->add_option("--data", data, "preprocessed data directory")->required();
  train->add_option("--out", out, "run directory")->required();
  train->add_option("--classifier", classifier, "pretrained classifier checkpoint");
  train->add_option("--lambda", lambda, "generation loss weight in [0, 1]")
      ->check(CLI::Number);
  train->add_option("--variant", variant, "full | no-rating | seq2seq");
  AddCommon(train, common);

  auto* gen = app.add_subcommand("generate", "answer a question about an item");
  gen->add_option("--model", model_path, "model checkpoint")->required();
  gen->add_option("--data", data, "preprocessed data directory")->required();
  gen->add_option("--item", item, "item id")->required();
  gen->add_option("--question", question, "question text")->required();
  gen->add_option("--rating", rating, "target rating 1-5 (omit for no preference)")
      ->check(CLI::Range(1, 5));
  gen->add_option("--beam", beam, "beam width");
  gen->add_option("--max-len", max_len, "maximum answer length");
  gen->add_option("--lexicon", lexicon_dir, "directory with words.tsv and suffixes.tsv");
  gen->add_option("--seed", common.seed, "seed for context subsampling");

  auto* eval = app.add_subcommand("evaluate", "score systems on the test shard");
  eval->add_option("--data", data, "preprocessed data directory")->required();
  eval->add_option("--systems", systems,
                   "comma list of random, nn-rating, seq2seq, ours, ours-no-rating");
  eval->add_option("--models", models, "system=checkpoint (repeatable)");
  eval->add_option("--beam", beam, "beam width");
  eval->add_option("--max-len", max_len, "maximum answer length");
  eval->add_option("--split", split, "shard to score (test or valid)");
  eval->add_option("--out", out, "write table.txt and metrics.jsonl here");
  AddCommon(eval, common);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return kUsageError;
  }

  try {
    if (pre->parsed()) {
      const rqa::TrainConfig config = Resolve(common, {});
      LogConfig("preprocess", config);
      rqa::RunPreprocess(data, out, config, LoadLexicon(lexicon_dir), std::cerr);
    } else if (pretrain->parsed()) {
      const rqa::TrainConfig config = Resolve(common, {});
      LogConfig("pretrain-classifier", config);
      const rqa::PretrainReport r = rqa::RunPretrain(data, out, config, std::cerr);
      std::cout << "heldout_accuracy " << r.heldout_accuracy << "\nmajority_baseline "
                << r.majority_accuracy << "\n";
    } else if (train->parsed()) {
      std::map<std::string, std::string> dedicated;
      if (!lambda.empty()) dedicated["lambda"] = lambda;
      if (!variant.empty()) dedicated["variant"] = variant;
      const rqa::TrainConfig config = Resolve(common, dedicated);
      LogConfig("train", config);
      const rqa::TrainSummary s = rqa::RunTrain(data, out, config, classifier, std::cerr);
      std::cout << "model " << s.model_path << "\nlog " << s.log_path << "\n";
    } else if (gen->parsed()) {
      rqa::GenerateRequest req{model_path, data,    item,        question,
                               rating,     beam,    max_len,     common.seed};
      const rqa::GenerateResult r = rqa::RunGenerate(req, LoadLexicon(lexicon_dir));
      std::cerr << "# generate resolved config\n" << r.config << "item=" << item
                << "\nrating=" << (rating ? std::to_string(*rating) : "none") << "\n";
      for (const std::string& w : r.warnings) std::cerr << "warning: " << w << "\n";
      std::cout << "snippets:";
      for (const rqa::TokenSeq& s : r.snippets) {
        std::cout << " [" << rqa::Detokenize(s) << "]";
      }
      std::cout << "\nanswer: " << r.answer << "\n";
    } else if (eval->parsed()) {
      std::map<std::string, std::string> dedicated;
      if (beam) dedicated["beam"] = std::to_string(*beam);
      if (max_len) dedicated["max_decode_len"] = std::to_string(*max_len);
      const rqa::TrainConfig config = Resolve(common, dedicated);
      LogConfig("evaluate", config);
      const rqa::EvalReport report = rqa::RunEvaluate(data, SplitList(systems),
                                                      ParsePairs(models), config, split,
                                                      std::cerr);
      std::cout << report.Table() << report.JsonLines();
      if (!out.empty()) {
        std::filesystem::create_directories(out);
        WriteText(out + "/table.txt", report.Table());
        WriteText(out + "/metrics.jsonl", report.JsonLines());
      }
    }
  } catch (const rqa::ContractViolation& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kContractError;
  } catch (const rqa::IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return kIoError;
  } catch (const rqa::FormatError& e) {
    std::cerr << "format error: " << e.what() << "\n";
    return kFormatError;
  } catch (const rqa::TrainingAborted& e) {
    std::cerr << "training aborted: " << e.what() << "\n";
    return kTrainingError;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return kIoError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
