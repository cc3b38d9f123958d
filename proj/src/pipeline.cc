#include "rqa/pipeline.h"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <memory>

#include "rqa/baselines.h"
#include "rqa/error.h"
#include "rqa/random.h"
#include "rqa/search.h"
#include "rqa/shard.h"

namespace rqa {

namespace {

void WriteText(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path);
  out << text;
}

Vocabulary LoadVocab(const DataPaths& paths) { return Vocabulary::Load(paths.vocab()); }

Shard LoadShardChecked(const DataPaths& paths, const std::string& split,
                       const Vocabulary& vocab) {
  Shard shard = ReadShard(paths.shard(split));
  if (shard.header.vocab_hash != vocab.HashHex()) {
    throw FormatError(paths.shard(split) + " was built for vocabulary " +
                      shard.header.vocab_hash + ", but " + paths.vocab() + " hashes to " +
                      vocab.HashHex());
  }
  return shard;
}

std::size_t EditDistance(const std::string& a, const std::string& b) {
  std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (a[i - 1] != b[j - 1])});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

}  // namespace

PreprocessSummary RunPreprocess(const std::string& reviews_path, const std::string& out_dir,
                                const TrainConfig& config, const PosLexicon& lexicon,
                                std::ostream& log) {
  config.Validate();
  std::filesystem::create_directories(out_dir);
  const DataPaths paths{out_dir};
  IngestResult ingest = Ingest(reviews_path, config.min_reviews);
  if (ingest.warnings() > 0) {
    log << "warning: skipped " << ingest.skipped_malformed << " malformed and "
        << ingest.skipped_bad_rating << " out-of-range-rating records\n";
  }
  RQA_REQUIRE(!ingest.bundles.empty(),
              "no item in " + reviews_path + " has at least " +
                  std::to_string(config.min_reviews) + " reviews");
  PreprocessSummary summary;
  summary.records = ingest.records;
  summary.warnings = ingest.warnings();
  summary.items = ingest.bundles.size();

  WriteItems(paths.items(), ingest.bundles);
  DatasetSplit split = SplitByItem(ingest.bundles, config.seed);
  const Vocabulary vocab = BuildVocab(split.train, config.min_freq, config.max_vocab);
  vocab.Save(paths.vocab());
  summary.vocab_size = vocab.size();

  const SnippetFn extractor =
      MakeSnippetFn(lexicon, SnippetOptions{config.max_snippets,
                                            config.limits.max_snippet_tokens});
  auto write = [&](const std::string& name, const std::vector<ItemBundle>& bundles) {
    std::vector<TrainingExample> examples;
    for (const ItemBundle& b : bundles) {
      for (TrainingExample& ex : BuildExamples(b, extractor, config.limits, config.seed)) {
        examples.push_back(std::move(ex));
      }
    }
    ShardHeader header;
    header.vocab_hash = vocab.HashHex();
    header.seed = config.seed;
    header.limits = config.limits;
    WriteShard(paths.shard(name), header, examples);
    return examples.size();
  };
  summary.train_examples = write("train", split.train);
  summary.valid_examples = write("valid", split.valid);
  summary.test_examples = write("test", split.test);
  WriteText(paths.config(), config.Serialize());
  log << "items=" << summary.items << " (train " << split.train.size() << ", valid "
      << split.valid.size() << ", test " << split.test.size() << ")"
      << " vocab=" << summary.vocab_size << " examples=" << summary.train_examples << "/"
      << summary.valid_examples << "/" << summary.test_examples << "\n";
  return summary;
}

std::vector<LabeledText> ClassifierCorpus(const Shard& shard, const Vocabulary& vocab,
                                          std::size_t max_tokens) {
  std::vector<LabeledText> out;
  for (const TrainingExample& ex : shard.examples) {
    std::vector<int> ids = vocab.Encode(Truncate(ex.target.tokens, max_tokens));
    if (ids.empty()) continue;
    out.push_back({std::move(ids), ex.target.rating});
  }
  return out;
}

PretrainReport RunPretrain(const std::string& data_dir, const std::string& out_path,
                           const TrainConfig& config, std::ostream& log) {
  config.Validate();
  const DataPaths paths{data_dir};
  const Vocabulary vocab = LoadVocab(paths);
  const Shard train = LoadShardChecked(paths, "train", vocab);
  const std::vector<LabeledText> corpus =
      ClassifierCorpus(train, vocab, config.limits.max_tokens);
  Rng rng(DeriveSeed(config.seed, HashString("classifier-init")));
  ClassifierParams cls = ClassifierParams::Create(
      vocab.size(), config.classifier_embedding, config.classifier_hidden, rng);
  PretrainOptions opt;
  opt.epochs = config.classifier_epochs;
  opt.learning_rate = config.classifier_lr;
  opt.batch_size = config.batch_size;
  opt.seed = config.seed;
  const PretrainReport report = PretrainClassifier(cls, corpus, opt);
  if (report.single_class) {
    log << "warning: training corpus has a single rating class; the classifier is "
           "degenerate\n";
  }
  log << "classifier: train=" << report.train_size << " heldout=" << report.heldout_size
      << " heldout_accuracy=" << report.heldout_accuracy
      << " majority_baseline=" << report.majority_accuracy
      << " final_train_loss=" << report.final_train_loss << "\n";

  Checkpoint ckpt;
  ckpt.config = config.Serialize();
  ckpt.vocab_hash = vocab.HashHex();
  ckpt.metadata["kind"] = "classifier";
  ckpt.metadata["heldout_accuracy"] = std::to_string(report.heldout_accuracy);
  ckpt.metadata["majority_accuracy"] = std::to_string(report.majority_accuracy);
  ParamSet set;
  cls.Register(set);
  StoreParams(ckpt, set);
  const auto parent = std::filesystem::path(out_path).parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
  WriteCheckpoint(out_path, ckpt);
  return report;
}

TrainSummary RunTrain(const std::string& data_dir, const std::string& out_dir,
                      const TrainConfig& config, const std::string& classifier_path,
                      std::ostream& log) {
  config.Validate();
  const DataPaths paths{data_dir};
  const Vocabulary vocab = LoadVocab(paths);
  const Shard train_shard = LoadShardChecked(paths, "train", vocab);
  const Shard valid_shard = LoadShardChecked(paths, "valid", vocab);

  std::optional<ClassifierParams> classifier;
  if (config.lambda < 1.0) {
    if (!classifier_path.empty()) {
      const Checkpoint ckpt = ReadCheckpoint(classifier_path);
      if (ckpt.vocab_hash != vocab.HashHex()) {
        throw FormatError("classifier " + classifier_path +
                          " was trained on a different vocabulary");
      }
      classifier = LoadClassifier(ckpt, TrainConfig::Parse(ckpt.config), vocab.size());
    } else if (config.freeze_classifier) {
      throw ContractViolation(
          "lambda < 1 needs a pretrained classifier (--classifier) or "
          "freeze_classifier=false");
    } else {
      Rng rng(DeriveSeed(config.seed, HashString("classifier-init")));
      classifier = ClassifierParams::Create(vocab.size(), config.classifier_embedding,
                                            config.classifier_hidden, rng);
    }
  }

  const auto train = Prepare(train_shard.examples, vocab, config.limits.max_tokens);
  const auto valid = Prepare(valid_shard.examples, vocab, config.limits.max_tokens);
  AnswerModel model = AnswerModel::Create(config.Model(vocab.size()), config.seed);
  Trainer trainer(config, std::move(model), std::move(classifier), vocab.HashHex());

  std::filesystem::create_directories(out_dir);
  TrainSummary summary;
  summary.log_path = out_dir + "/train_log.jsonl";
  summary.model_path = out_dir + "/model.ckpt";
  std::ofstream log_file(summary.log_path, std::ios::trunc);
  if (!log_file) throw IoError("cannot write " + summary.log_path);
  summary.result = trainer.Train(train, valid, &log_file, &vocab);
  WriteCheckpoint(summary.model_path, summary.result.best);
  WriteCheckpoint(out_dir + "/last.ckpt", trainer.Save());
  for (const EpochRecord& e : summary.result.epochs) {
    log << "epoch " << e.epoch << " step " << e.step << " train_gen_loss "
        << e.train_gen_loss << " valid_loss " << e.valid_loss << "\n";
  }
  if (summary.result.best_epoch) {
    log << "best epoch " << *summary.result.best_epoch << " valid_loss "
        << summary.result.best_valid_loss << "\n";
  }
  return summary;
}

std::vector<std::string> NearestKeys(const std::vector<std::string>& keys,
                                     const std::string& query, std::size_t count) {
  std::vector<std::pair<std::size_t, std::string>> scored;
  for (const std::string& k : keys) scored.emplace_back(EditDistance(k, query), k);
  std::sort(scored.begin(), scored.end());
  std::vector<std::string> out;
  for (std::size_t i = 0; i < std::min(count, scored.size()); ++i) {
    out.push_back(scored[i].second);
  }
  return out;
}

GenerateResult RunGenerate(const GenerateRequest& request, const PosLexicon& lexicon) {
  const DataPaths paths{request.data_dir};
  const Checkpoint ckpt = ReadCheckpoint(request.model_path);
  const Vocabulary vocab = LoadVocab(paths);
  if (ckpt.vocab_hash != vocab.HashHex()) {
    throw FormatError("checkpoint " + request.model_path + " was trained with vocabulary " +
                      ckpt.vocab_hash + " but " + paths.vocab() + " hashes to " +
                      vocab.HashHex());
  }
  TrainConfig config = TrainConfig::Parse(ckpt.config);
  if (request.seed) config.seed = *request.seed;
  if (request.beam) config.beam = *request.beam;
  if (request.max_len) config.max_decode_len = *request.max_len;
  config.Validate();
  const std::vector<ItemBundle> items = ReadItems(paths.items());
  const ItemBundle* bundle = nullptr;
  for (const ItemBundle& b : items) {
    if (b.item_id == request.item_id) bundle = &b;
  }
  if (bundle == nullptr) {
    std::vector<std::string> keys;
    for (const ItemBundle& b : items) keys.push_back(b.item_id);
    std::string msg = "unknown item '" + request.item_id + "'; nearest:";
    for (const std::string& k : NearestKeys(keys, request.item_id, 5)) msg += " " + k;
    throw ContractViolation(msg);
  }

  GenerateResult result;
  result.config = config.Serialize();
  std::vector<Review> context;
  for (std::size_t k : SubsampleIndices(bundle->reviews.size(), config.limits.max_reviews,
                                        DeriveSeed(config.seed, HashString(bundle->item_id)))) {
    Review r = bundle->reviews[k];
    r.tokens = Truncate(r.tokens, config.limits.max_tokens);
    context.push_back(std::move(r));
  }
  const TokenSeq question = Tokenize(request.question);
  result.snippets = FitSnippetBudget(
      ExtractSnippets(question, lexicon,
                      SnippetOptions{config.max_snippets, config.limits.max_snippet_tokens}),
      config.limits.max_snippet_tokens);
  if (result.snippets.empty()) {
    result.warnings.push_back("no noun phrase found in the question; decoding without snippets");
  }
  RatingSymbol rating = RatingSymbol::Pad();
  if (request.rating.has_value()) {
    RQA_REQUIRE(*request.rating >= 1 && *request.rating <= 5, "--rating must be in 1..5");
    rating = RatingSymbol::Stars(*request.rating);
  }
  const AnswerModel model = LoadModel(ckpt, vocab.size());
  const ModelInput input =
      MakeModelInput(context, result.snippets, rating, vocab, config.limits.max_tokens);
  const EncodedContext ctx = model.Encode(input);
  const Hypothesis best = BeamDecode(model, ctx, config.beam, config.max_decode_len);
  result.token_ids = best.Surface();
  result.answer = Detokenize(vocab.Decode(result.token_ids));
  return result;
}

std::string SystemDisplayName(const std::string& key) {
  if (key == "random") return "Random";
  if (key == "nn-rating") return "NN-rating";
  if (key == "seq2seq") return "Seq2seq";
  if (key == "ours") return "Ours";
  if (key == "ours-no-rating") return "Ours w/o rating";
  throw ContractViolation("unknown system '" + key +
                          "' (expected random, nn-rating, seq2seq, ours, ours-no-rating)");
}

EvalReport RunEvaluate(const std::string& data_dir, const std::vector<std::string>& systems,
                       const std::map<std::string, std::string>& models,
                       const TrainConfig& config, const std::string& split,
                       std::ostream& log) {
  const DataPaths paths{data_dir};
  const Vocabulary vocab = LoadVocab(paths);
  const Shard shard = LoadShardChecked(paths, split, vocab);
  RQA_REQUIRE(!shard.examples.empty(), split + " shard has no examples");
  const std::uint64_t seed = config.seed;

  // Models stay alive for the duration of the evaluation.
  std::vector<std::shared_ptr<AnswerModel>> loaded;
  std::vector<NamedSystem> named;
  for (const std::string& key : systems) {
    const std::string display = SystemDisplayName(key);
    if (key == "random") {
      named.push_back({display, [seed](const TrainingExample& ex, std::size_t i) {
                         return BaselineRandom(ex.context, DeriveSeed(seed, i));
                       }});
      continue;
    }
    if (key == "nn-rating") {
      named.push_back({display, [seed](const TrainingExample& ex, std::size_t i) {
                         std::optional<int> stars;
                         if (!ex.rating.is_pad()) stars = ex.rating.stars();
                         return BaselineNnRating(ex.context, stars, DeriveSeed(seed, i));
                       }});
      continue;
    }
    const auto it = models.find(key);
    if (it == models.end()) {
      throw ContractViolation("system '" + key + "' needs a checkpoint: --models " + key +
                              "=<path>");
    }
    const Checkpoint ckpt = ReadCheckpoint(it->second);
    if (ckpt.vocab_hash != vocab.HashHex()) {
      throw FormatError("checkpoint " + it->second + " does not match " + paths.vocab());
    }
    const TrainConfig mc = TrainConfig::Parse(ckpt.config);
    const ModelVariant expected = key == "ours"      ? ModelVariant::kFull
                                  : key == "seq2seq" ? ModelVariant::kSeq2seq
                                                     : ModelVariant::kNoRating;
    if (mc.variant != expected) {
      throw FormatError("checkpoint " + it->second + " is a '" +
                        ModelVariantName(mc.variant) + "' model, system '" + key +
                        "' needs '" + ModelVariantName(expected) + "'");
    }
    auto model = std::make_shared<AnswerModel>(LoadModel(ckpt, vocab.size()));
    loaded.push_back(model);
    const std::size_t beam = config.beam, max_len = config.max_decode_len;
    const std::size_t max_tokens = mc.limits.max_tokens;
    named.push_back({display, [model, &vocab, beam, max_len, max_tokens](
                                  const TrainingExample& ex, std::size_t) {
                       const EncodedContext ctx =
                           model->Encode(MakeModelInput(ex, vocab, max_tokens));
                       return vocab.Decode(BeamDecode(*model, ctx, beam, max_len).Surface());
                     }});
  }
  EvalReport report = EvaluateSystems(shard.examples, named);
  for (const SystemReport& s : report.systems) {
    for (const std::string& m : s.failure_messages) {
      log << "warning: " << s.name << " failed on " << m << "\n";
    }
  }
  return report;
}

}  // namespace rqa
