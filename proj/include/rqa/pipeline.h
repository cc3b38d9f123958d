#ifndef RQA_PIPELINE_H_
#define RQA_PIPELINE_H_

#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "rqa/config.h"
#include "rqa/evaluation.h"
#include "rqa/objective.h"
#include "rqa/shard.h"
#include "rqa/snippet.h"
#include "rqa/trainer.h"

namespace rqa {

// Files written by preprocess into the data directory.
struct DataPaths {
  std::string dir;
  std::string vocab() const { return dir + "/vocab.txt"; }
  std::string items() const { return dir + "/items.jsonl"; }
  std::string config() const { return dir + "/config.txt"; }
  std::string shard(const std::string& split) const { return dir + "/" + split + ".shard"; }
};

struct PreprocessSummary {
  std::size_t records = 0;
  std::size_t warnings = 0;
  std::size_t items = 0;
  std::size_t vocab_size = 0;
  std::size_t train_examples = 0, valid_examples = 0, test_examples = 0;
};

// Ingest, split by item, build the vocabulary on the training items, and
// write leave-one-out shards.
PreprocessSummary RunPreprocess(const std::string& reviews_path, const std::string& out_dir,
                                const TrainConfig& config, const PosLexicon& lexicon,
                                std::ostream& log);

// Training review texts with their ratings, as hard token ids.
std::vector<LabeledText> ClassifierCorpus(const Shard& shard, const Vocabulary& vocab,
                                          std::size_t max_tokens);

// Pretrains the rating classifier on the training shard and writes it as a
// checkpoint holding `classifier.*` tensors.
PretrainReport RunPretrain(const std::string& data_dir, const std::string& out_path,
                           const TrainConfig& config, std::ostream& log);

struct TrainSummary {
  TrainResult result;
  std::string model_path;
  std::string log_path;
};

// Writes <out_dir>/model.ckpt (best validation state), last.ckpt and
// train_log.jsonl. `classifier_path` may be empty when lambda is 1 or the
// classifier is trained jointly (freeze_classifier=false).
TrainSummary RunTrain(const std::string& data_dir, const std::string& out_dir,
                      const TrainConfig& config, const std::string& classifier_path,
                      std::ostream& log);

struct GenerateRequest {
  std::string model_path;
  std::string data_dir;
  std::string item_id;
  std::string question;
  std::optional<int> rating;  // absent: PAD
  std::optional<std::size_t> beam;
  std::optional<std::size_t> max_len;
  std::optional<std::uint64_t> seed;  // overrides the checkpoint's seed
};

struct GenerateResult {
  std::string answer;
  std::vector<int> token_ids;
  std::vector<TokenSeq> snippets;
  std::vector<std::string> warnings;
  std::string config;  // checkpoint config with the request's overrides
};

// Never writes to disk.
GenerateResult RunGenerate(const GenerateRequest& request, const PosLexicon& lexicon);

// Item ids closest to `query` by edit distance.
std::vector<std::string> NearestKeys(const std::vector<std::string>& keys,
                                     const std::string& query, std::size_t count);

// System keys: random, nn-rating, seq2seq, ours, ours-no-rating. Model-based
// systems read their checkpoint from `models` (key -> path).
EvalReport RunEvaluate(const std::string& data_dir, const std::vector<std::string>& systems,
                       const std::map<std::string, std::string>& models,
                       const TrainConfig& config, const std::string& split,
                       std::ostream& log);

std::string SystemDisplayName(const std::string& key);

}  // namespace rqa

#endif  // RQA_PIPELINE_H_
