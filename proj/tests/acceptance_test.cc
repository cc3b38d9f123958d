// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits nonzero if any fails. Optional arguments select criteria by number.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "gradient_cases.h"
#include "oracles.h"
#include "rqa/checkpoint.h"
#include "rqa/config.h"
#include "rqa/corpus.h"
#include "rqa/encoder.h"
#include "rqa/error.h"
#include "rqa/metrics.h"
#include "rqa/model.h"
#include "rqa/objective.h"
#include "rqa/pipeline.h"
#include "rqa/search.h"
#include "rqa/snippet.h"
#include "rqa/trainer.h"
#include "test_util.h"

namespace rqa {
namespace {

using testing::TempDir;

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  int id;
  std::string name;
  double budget_s;  // 0: untimed
  std::function<Outcome()> run;
};

std::string Fmt(const char* format, double a) {
  char buf[128];
  std::snprintf(buf, sizeof(buf), format, a);
  return buf;
}

std::string DataFile(const std::string& rel) { return std::string(RQA_DATA_DIR) + "/" + rel; }

std::vector<std::string> ReadLines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path);
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) lines.push_back(line);
  return lines;
}

std::vector<std::string> ItemIds(const std::string& data_dir) {
  std::vector<std::string> ids;
  for (const auto& line : ReadLines(data_dir + "/items.jsonl")) {
    if (!line.empty()) ids.push_back(nlohmann::json::parse(line).at("item").get<std::string>());
  }
  return ids;
}

// Small model dims shared by the training criteria.
void SetDims(TrainConfig& c, std::size_t dim) {
  c.hidden_dim = c.embedding_dim = c.attention_dim = dim;
}

// ---------------------------------------------------------------------------

Outcome GradientIntegrity() {
  const auto cases = testing::GradientCases();
  double worst = 0.0;
  std::string worst_name;
  std::size_t trials = 0;
  for (const auto& c : cases) {
    Rng rng(DeriveSeed(101, HashString(c.name)));
    for (int t = 0; t < 100; ++t, ++trials) {
      const testing::GradInstance inst = c.make(rng);
      const double err = testing::GradientError(inst.f, inst.inputs);
      if (!(err <= worst)) {
        worst = err;
        worst_name = c.name;
      }
    }
  }
  return {worst < 1e-4, std::to_string(cases.size()) + " primitives, " + std::to_string(trials) +
                            " trials, worst relative error " + Fmt("%.2e", worst) + " (" +
                            worst_name + ")"};
}

Outcome LiteralDegeneracy() {
  Rng rng(202);
  int bitwise = 0, differs = 0;
  const int trials = 200;
  for (int t = 0; t < trials; ++t) {
    const std::size_t dim = 2 + rng.Below(5), p = 2 + rng.Below(8), m = 1 + rng.Below(6);
    Rng prng(rng.Next());
    const EncoderParams params = EncoderParams::Create(12, dim, dim, prng);
    for (Tensor t2 : {params.v_alpha1, params.v_alpha2}) {
      for (double& v : t2.mutable_data()) v = prng.Uniform(-1.0, 1.0);
    }
    Tensor tokens = testing::RandomTensor({p, dim}, rng, 1.0, false);
    std::vector<double> mask(p, 1.0);
    for (std::size_t i = 1; i < p; ++i) mask[i] = rng.Below(4) == 0 ? 0.0 : 1.0;
    for (std::size_t i = 0; i < p; ++i) {
      if (mask[i] == 0.0) {
        for (std::size_t c = 0; c < dim; ++c) tokens.mutable_data()[i * dim + c] = 0.0;
      }
    }
    const Tensor snippets = testing::RandomTensor({m, dim}, rng, 1.0, false);
    const SnippetAttention lit =
        AttendSnippets(tokens, mask, snippets, params, AttentionForm::kLiteral);
    const SnippetAttention cor = AttendSnippets(tokens, mask, snippets, params);
    const auto h = tokens.data();
    const auto l = lit.attended_reviews.data();
    const auto c = cor.attended_reviews.data();
    bitwise += std::equal(h.begin(), h.end(), l.begin());
    differs += !std::equal(h.begin(), h.end(), c.begin());
  }
  return {bitwise == trials && differs == trials,
          "literal form bitwise identity " + std::to_string(bitwise) + "/" +
              std::to_string(trials) + ", corrected form differs " + std::to_string(differs) +
              "/" + std::to_string(trials)};
}

Outcome OverfitOracle() {
  const std::vector<std::string> lines = ReadLines(DataFile("toy/reviews.jsonl"));
  IngestResult ingest = IngestLines(lines, 1);
  ItemBundle bundle = ingest.bundles.at(0);
  bundle.reviews.resize(3);
  const std::vector<ItemBundle> bundles{bundle};
  const Vocabulary vocab = BuildVocab(bundles, 1, 30000);
  TrainConfig c;
  SetDims(c, 32);
  c.learning_rate = 0.005;
  c.batch_size = 3;
  c.epochs = 500;
  c.patience = 500;
  c.max_steps = 500;
  c.lambda = 1.0;
  c.seed = 3;
  const auto examples =
      BuildExamples(bundle, MakeSnippetFn(PosLexicon::Default()), c.limits, c.seed);
  const auto data = Prepare(examples, vocab, c.limits.max_tokens);
  Trainer trainer(c, AnswerModel::Create(c.Model(vocab.size()), c.seed), std::nullopt,
                  vocab.HashHex());
  trainer.Train(data, {});
  const double loss = trainer.ValidationLoss(data);
  int reproduced = 0;
  for (const auto& ex : data) {
    const std::vector<int> want(ex.targets.begin(), ex.targets.end() - 1);
    const auto got = GreedyDecode(trainer.model(), trainer.model().Encode(ex.input),
                                  ex.targets.size() + 2);
    reproduced += got == want;
  }
  return {trainer.step() == 500 && loss < 0.1 && reproduced >= 1,
          std::to_string(trainer.step()) + " steps, mean gen_loss " + Fmt("%.4f", loss) + ", " +
              std::to_string(reproduced) + "/3 targets reproduced by greedy decoding"};
}

// Preprocess + classifier pretraining on a corpus into `dir`.
PretrainReport PrepareData(const std::string& reviews, const std::string& dir,
                           const TrainConfig& c, std::ostream& log) {
  RunPreprocess(reviews, dir + "/data", c, PosLexicon::Default(), log);
  return RunPretrain(dir + "/data", dir + "/classifier.ckpt", c, log);
}

TrainConfig ToyConfig() {
  TrainConfig c;
  SetDims(c, 32);
  c.classifier_hidden = c.classifier_embedding = 32;
  c.learning_rate = 0.005;
  c.epochs = 8;
  c.patience = 8;
  c.seed = 1;
  return c;
}

Outcome RatingConditioning() {
  TempDir tmp;
  std::ostringstream log;
  TrainConfig c = ToyConfig();
  const PretrainReport pre = PrepareData(DataFile("toy/reviews.jsonl"), tmp.path(), c, log);
  const TrainSummary train =
      RunTrain(tmp.path() + "/data", tmp.path() + "/model", c, tmp.File("classifier.ckpt"), log);
  const Checkpoint cls_ckpt = ReadCheckpoint(tmp.File("classifier.ckpt"));
  const Vocabulary vocab = Vocabulary::Load(tmp.path() + "/data/vocab.txt");
  const ClassifierParams cls =
      LoadClassifier(cls_ckpt, TrainConfig::Parse(cls_ckpt.config), vocab.size());
  const std::vector<std::string> items = ItemIds(tmp.path() + "/data");
  int correct = 0, total = 0, empty = 0;
  std::string sample;
  for (const auto& item : items) {
    for (int stars : {5, 1}) {
      GenerateRequest req;
      req.model_path = train.model_path;
      req.data_dir = tmp.path() + "/data";
      req.item_id = item;
      req.question = "how is the quality ?";
      req.rating = stars;
      const GenerateResult r = RunGenerate(req, PosLexicon::Default());
      ++total;
      if (r.token_ids.empty()) {
        ++empty;
        continue;
      }
      const int predicted = PredictStars(ClassifyRating(cls, r.token_ids));
      correct += predicted == stars;
      if (sample.empty()) sample = "\"" + r.answer + "\"";
    }
  }
  const double rate = total ? static_cast<double>(correct) / total : 0.0;
  return {items.size() == 50 && rate >= 0.8,
          std::to_string(items.size()) + " items, classifier agrees with requested rating on " +
              std::to_string(correct) + "/" + std::to_string(total) + " (" +
              Fmt("%.1f%%", 100 * rate) + ", " + std::to_string(empty) +
              " empty); classifier held-out accuracy " + Fmt("%.3f", pre.heldout_accuracy) +
              "; final valid loss " + Fmt("%.3f", train.result.epochs.back().valid_loss) +
              "; e.g. rating 5: " + sample};
}

Outcome AblationDirection() {
  TempDir tmp;
  std::ostringstream log;
  // 200 of the 240 synthetic items.
  const std::vector<std::string> lines = ReadLines(DataFile("toy/reviews_240.jsonl"));
  std::vector<std::string> order;
  std::map<std::string, std::vector<std::string>> by_item;
  for (const auto& line : lines) {
    if (line.empty()) continue;
    const std::string asin = nlohmann::json::parse(line).at("asin").get<std::string>();
    if (!by_item.count(asin)) order.push_back(asin);
    by_item[asin].push_back(line);
  }
  const std::string subsample = tmp.File("reviews_200.jsonl");
  {
    std::ofstream out(subsample);
    for (std::size_t i : SubsampleIndices(order.size(), 200, 5)) {
      for (const auto& line : by_item[order[i]]) out << line << '\n';
    }
  }
  TrainConfig c = ToyConfig();
  SetDims(c, 16);
  c.classifier_hidden = c.classifier_embedding = 16;
  c.epochs = c.patience = 5;
  c.learning_rate = 0.002;
  c.seed = 4;
  PrepareData(subsample, tmp.path(), c, log);
  std::map<std::string, double> loss;
  std::map<std::string, std::string> models;
  for (ModelVariant v : {ModelVariant::kFull, ModelVariant::kNoRating}) {
    TrainConfig vc = c;
    vc.variant = v;
    const std::string key = v == ModelVariant::kFull ? "ours" : "ours-no-rating";
    const TrainSummary s = RunTrain(tmp.path() + "/data", tmp.path() + "/" + key, vc,
                                    tmp.File("classifier.ckpt"), log);
    loss[key] = s.result.epochs.back().valid_loss;
    models[key] = s.model_path;
    if (s.result.epochs.size() != 5) throw std::runtime_error("expected 5 epochs for " + key);
  }
  const EvalReport report =
      RunEvaluate(tmp.path() + "/data", {"ours", "ours-no-rating"}, models, c, "test", log);
  const SystemReport* full = report.Find("Ours");
  const SystemReport* ablated = report.Find("Ours w/o rating");
  std::string deltas;
  for (std::size_t k = 0; k < kMetricNames.size(); ++k) {
    deltas += std::string(k ? ", " : "") + kMetricNames[k] + " " +
              Fmt("%+.3f", full->scores[k] - ablated->scores[k]);
  }
  return {loss["ours"] <= loss["ours-no-rating"],
          "valid gen_loss after 5 epochs: full " + Fmt("%.4f", loss["ours"]) + " vs no-rating " +
              Fmt("%.4f", loss["ours-no-rating"]) + "; test metric deltas (reported only): " +
              deltas};
}

Outcome MetricOracles() {
  const std::vector<Tokens> cand{{"the", "cat"}}, ref{{"the", "cat", "sat"}};
  const double bleu = CorpusBleu(cand, ref, 1);
  const double meteor = Meteor(Tokens{"fit"}, Tokens{"fit"});
  const testing::SweepResult lcs = testing::LcsCanonicalSweep(8);
  const testing::SweepResult relabel = testing::LcsRelabelSweep(8, 20000, 6);
  const bool pass = std::fabs(bleu - 60.65) <= 0.01 && meteor == 50.0 && lcs.mismatches == 0 &&
                    relabel.mismatches == 0;
  return {pass, "BLEU-1 " + Fmt("%.5f", bleu) + "; METEOR " + Fmt("%.17g", meteor) +
                    "; LCS exhaustive (length <= 8, canonical first side) " +
                    std::to_string(lcs.pairs) + " pairs, " + std::to_string(lcs.mismatches) +
                    " mismatches; relabeling " + std::to_string(relabel.pairs) + " checks, " +
                    std::to_string(relabel.mismatches) + " mismatches"};
}

Outcome ClassifierPretraining() {
  TempDir tmp;
  std::ostringstream log;
  const TrainConfig c = ToyConfig();
  const PretrainReport r = PrepareData(DataFile("toy/reviews.jsonl"), tmp.path(), c, log);
  return {r.heldout_accuracy >= 0.95,
          "held-out accuracy " + Fmt("%.4f", r.heldout_accuracy) + " on " +
              std::to_string(r.heldout_size) + " reviews, majority baseline " +
              Fmt("%.4f", r.majority_accuracy)};
}

Outcome BeamProperties() {
  Rng rng(808);
  auto context = [&](const AnswerModel& m) {
    return m.Encode(testing::RandomInput(rng, m.config().vocab_size, 2, 4, 2));
  };
  int same = 0;
  for (int t = 0; t < 100; ++t) {
    const AnswerModel m = testing::ScrambledModel(12, 1000 + t, 1.5);
    const EncodedContext ctx = context(m);
    const Hypothesis g = GreedySearch(m, ctx, 10);
    const Hypothesis b = BeamDecode(m, ctx, 1, 10);
    same += g.tokens == b.tokens && g.log_prob == b.log_prob;
  }
  int dominated = 0, cases = 0;
  for (double scale : {0.5, 1.5, 3.0}) {
    for (int t = 0; t < 100; ++t, ++cases) {
      const AnswerModel m = testing::ScrambledModel(12, 2000 + t, scale);
      const EncodedContext ctx = context(m);
      const Hypothesis g = GreedySearch(m, ctx, 15);
      double best = -std::numeric_limits<double>::infinity();
      for (const Hypothesis& h : BeamSearch(m, ctx, 5, 15)) best = std::max(best, h.log_prob);
      dominated += best >= g.log_prob;
    }
  }
  int exact = 0, exhaustive = 0;
  for (int t = 0; t < 100; ++t) {
    // Two words plus EOS are searchable.
    const AnswerModel m = testing::ScrambledModel(Vocabulary::kNumSpecials + 2, 3000 + t, 1.5);
    const EncodedContext ctx = context(m);
    for (std::size_t max_len : {1u, 2u, 3u}) {
      const auto all = testing::AllHypotheses(m, ctx, max_len);
      const Hypothesis best = *std::min_element(all.begin(), all.end(), RanksBefore);
      exact += BeamDecode(m, ctx, 5, max_len).tokens == best.tokens;
      ++exhaustive;
    }
  }
  return {same == 100 && dominated == cases && exact == exhaustive,
          "beam-1 == greedy " + std::to_string(same) + "/100; beam-5 log-prob >= greedy " +
              std::to_string(dominated) + "/" + std::to_string(cases) +
              "; beam-5 == exhaustive argmax " + std::to_string(exact) + "/" +
              std::to_string(exhaustive)};
}

// Full pipeline into `dir`; returns generated answers.
std::vector<std::string> PipelineRun(const std::string& dir) {
  std::ostringstream log;
  TrainConfig c;
  SetDims(c, 8);
  c.classifier_hidden = c.classifier_embedding = 8;
  c.classifier_epochs = 1;
  c.learning_rate = 0.01;
  c.epochs = 2;
  c.max_steps = 40;
  c.beam = 3;
  c.seed = 9;
  PrepareData(DataFile("toy/reviews.jsonl"), dir, c, log);
  RunTrain(dir + "/data", dir + "/model", c, dir + "/classifier.ckpt", log);
  std::vector<std::string> answers;
  const std::vector<std::string> items = ItemIds(dir + "/data");
  for (std::size_t i = 0; i < items.size(); i += 7) {
    for (std::optional<int> rating : {std::optional<int>(5), std::optional<int>()}) {
      GenerateRequest req;
      req.model_path = dir + "/model/model.ckpt";
      req.data_dir = dir + "/data";
      req.item_id = items[i];
      req.question = "is the fabric soft ?";
      req.rating = rating;
      answers.push_back(RunGenerate(req, PosLexicon::Default()).answer);
    }
  }
  return answers;
}

Outcome Determinism() {
  TempDir a, b;
  const auto answers_a = PipelineRun(a.path());
  const auto answers_b = PipelineRun(b.path());
  const std::vector<std::string> files = {
      "data/vocab.txt",   "data/items.jsonl",      "data/config.txt",
      "data/train.shard", "data/valid.shard",      "data/test.shard",
      "classifier.ckpt",  "model/train_log.jsonl", "model/model.ckpt",
      "model/last.ckpt"};
  std::vector<std::string> differing;
  for (const auto& f : files) {
    if (testing::ReadFile(a.File(f)) != testing::ReadFile(b.File(f))) differing.push_back(f);
  }
  const bool answers_same = answers_a == answers_b;
  std::string detail = std::to_string(files.size() - differing.size()) + "/" +
                       std::to_string(files.size()) + " artifacts byte-identical, " +
                       std::to_string(answers_a.size()) + " generated answers " +
                       (answers_same ? "identical" : "DIFFER");
  for (const auto& f : differing) detail += "; differs: " + f;
  return {differing.empty() && answers_same, detail};
}

Outcome HyperparameterConformance() {
  const TrainConfig c;
  const std::string expected =
      "learning_rate=0.0002\nclip=5\nbatch_size=16\nepochs=30\npatience=5\nmax_steps=0\n"
      "lambda=0.8\npad_rating_prob=0.1\nseed=1\nhidden_dim=512\nembedding_dim=512\n"
      "attention_dim=512\nlayers=1\nvariant=full\nbeam=5\nmax_decode_len=15\n"
      "max_reviews=20\nmax_tokens=20\nmax_snippet_tokens=20\nmax_snippets=5\n"
      "min_reviews=20\nmin_freq=5\nmax_vocab=30000\nclassifier_hidden=256\n"
      "classifier_embedding=256\nfreeze_classifier=true\nclassifier_epochs=5\n"
      "classifier_lr=0.001\n";
  const bool fields = c.hidden_dim == 512 && c.embedding_dim == 512 && c.layers == 1 &&
                      c.learning_rate == 0.0002 && c.clip == 5.0 &&
                      c.limits.max_reviews == 20 && c.limits.max_tokens == 20 &&
                      c.limits.max_snippet_tokens == 20 && c.beam == 5 &&
                      c.max_decode_len == 15;
  const bool snapshot = c.Serialize() == expected;
  return {fields && snapshot, std::string("reference values ") + (fields ? "match" : "DIFFER") +
                                  ", serialized snapshot " +
                                  (snapshot ? "matches" : "DIFFERS:\n" + c.Serialize())};
}

}  // namespace
}  // namespace rqa

int main(int argc, char** argv) {
  using namespace rqa;
  const std::vector<Criterion> criteria = {
      {1, "gradient integrity", 5, GradientIntegrity},
      {2, "literal attention degeneracy", 1, LiteralDegeneracy},
      {3, "overfit oracle", 120, OverfitOracle},
      {4, "rating conditioning", 900, RatingConditioning},
      {5, "ablation direction", 3600, AblationDirection},
      {6, "metric oracles", 10, MetricOracles},
      {7, "classifier pretraining", 120, ClassifierPretraining},
      {8, "beam properties", 30, BeamProperties},
      {9, "determinism", 0, Determinism},
      {10, "hyperparameter conformance", 0, HyperparameterConformance},
  };
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::stoi(argv[i]));
  int failures = 0;
  for (const auto& c : criteria) {
    if (!selected.empty() && !selected.count(c.id)) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = c.run();
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (c.budget_s > 0 && secs > c.budget_s) {
      out.pass = false;
      out.detail += "; over the " + Fmt("%.0f", c.budget_s) + " s budget";
    }
    failures += !out.pass;
    std::cout << (out.pass ? "PASS" : "FAIL") << " criterion " << c.id << " (" << c.name
              << ", " << Fmt("%.2f", secs) << " s): " << out.detail << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
