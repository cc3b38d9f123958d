#include "rqa/objective.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>

#include "rqa/adam.h"
#include "rqa/error.h"
#include "rqa/random.h"

namespace rqa {

ClassifierParams ClassifierParams::Create(std::size_t vocab_size,
                                          std::size_t embedding_dim,
                                          std::size_t hidden_dim, Rng& rng) {
  ClassifierParams p;
  p.embedding = UniformParam({vocab_size, embedding_dim}, kInitScale, rng);
  p.gru = GruParams::Create(embedding_dim, hidden_dim, rng);
  p.w_out = UniformParam({hidden_dim, kNumRatingClasses}, kInitScale, rng);
  p.b_out = ZeroParam({kNumRatingClasses});
  return p;
}

ClassifierParams ClassifierParams::CreateShared(const Tensor& table,
                                                std::size_t hidden_dim, Rng& rng) {
  ClassifierParams p;
  p.share_embedding = true;
  p.embedding = table;
  p.gru = GruParams::Create(table.dim(1), hidden_dim, rng);
  p.w_out = UniformParam({hidden_dim, kNumRatingClasses}, kInitScale, rng);
  p.b_out = ZeroParam({kNumRatingClasses});
  return p;
}

void ClassifierParams::Register(ParamSet& set) const {
  if (!share_embedding) set.Add("classifier.embedding", embedding);
  gru.Register(set, "classifier.gru");
  set.Add("classifier.w_out", w_out);
  set.Add("classifier.b_out", b_out);
}

namespace {

Tensor RunClassifier(const ClassifierParams& params, const Tensor& inputs) {
  const std::size_t steps = inputs.dim(0), e = inputs.dim(1);
  std::vector<std::size_t> row(1);
  Tensor h = Tensor::Zeros({params.gru.hidden_dim});
  for (std::size_t t = 0; t < steps; ++t) {
    row[0] = t;
    h = GruCell(Reshape(Rows(inputs, row), {e}), h, params.gru);
  }
  return Add(MatMul(h, params.w_out), params.b_out);
}

}  // namespace

Tensor ClassifyRating(const ClassifierParams& params, std::span<const int> ids) {
  RQA_REQUIRE(!ids.empty(), "ClassifyRating: empty sequence");
  return RunClassifier(params, EmbeddingLookup(params.embedding, ids));
}

Tensor ClassifyRating(const ClassifierParams& params, const Tensor& distributions) {
  RQA_REQUIRE(distributions.rank() == 2 && distributions.dim(0) >= 1 &&
                  distributions.dim(1) == params.embedding.dim(0),
              "ClassifyRating: distributions must be [T, V], got " +
                  ShapeString(distributions.shape()));
  return RunClassifier(params, MatMul(distributions, params.embedding));
}

int PredictStars(const Tensor& logits) {
  RQA_REQUIRE(logits.numel() == kNumRatingClasses, "PredictStars: expected 5 logits");
  const auto v = logits.data();
  return static_cast<int>(std::max_element(v.begin(), v.end()) - v.begin()) + 1;
}

Tensor GenerationLoss(const Tensor& log_probs, std::span<const int> targets,
                      std::span<const double> step_mask) {
  RQA_REQUIRE(log_probs.rank() == 2 && log_probs.dim(0) == targets.size(),
              "GenerationLoss: log_probs " + ShapeString(log_probs.shape()) +
                  " for " + std::to_string(targets.size()) + " targets");
  RQA_REQUIRE(step_mask.empty() || step_mask.size() == targets.size(),
              "GenerationLoss: mask length mismatch");
  double count = 0.0;
  std::vector<double> weights(targets.size(), 1.0);
  for (std::size_t t = 0; t < targets.size(); ++t) {
    if (!step_mask.empty()) weights[t] = step_mask[t] != 0.0 ? 1.0 : 0.0;
    count += weights[t];
  }
  RQA_REQUIRE(count > 0.0, "GenerationLoss: every step is masked");
  const Tensor picked = Pick(log_probs, targets);
  const Tensor w = Tensor::FromData({targets.size()}, std::move(weights));
  return Scale(Sum(Mul(picked, w)), -1.0 / count);
}

Tensor ClassifierLoss(const Tensor& logits, int stars) {
  RQA_REQUIRE(stars >= 1 && stars <= 5, "ClassifierLoss: stars out of range");
  const int cls = stars - 1;
  return CrossEntropy(Reshape(logits, {kNumRatingClasses}), {&cls, 1});
}

LossBreakdown CombinedLoss(const Tensor& gen, const std::optional<Tensor>& cls,
                           double lambda) {
  RQA_REQUIRE(lambda >= 0.0 && lambda <= 1.0,
              "lambda must be in [0, 1], got " + std::to_string(lambda));
  LossBreakdown out;
  out.lambda = lambda;
  out.gen_loss = gen.item();
  if (cls.has_value()) {
    out.cls_loss = cls->item();
    out.total = Add(Scale(gen, lambda), Scale(*cls, 1.0 - lambda));
  } else {
    out.total = Scale(gen, lambda);
  }
  return out;
}

void StratifiedSplit(std::span<const LabeledText> corpus, double heldout_fraction,
                     std::uint64_t seed, std::vector<LabeledText>& train,
                     std::vector<LabeledText>& heldout) {
  RQA_REQUIRE(heldout_fraction >= 0.0 && heldout_fraction < 1.0,
              "heldout_fraction must be in [0, 1)");
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < corpus.size(); ++i) by_class[corpus[i].stars].push_back(i);
  train.clear();
  heldout.clear();
  for (auto& [stars, idx] : by_class) {
    Rng rng(DeriveSeed(seed, HashString("stratify"), static_cast<std::uint64_t>(stars)));
    Shuffle(idx, rng);
    const auto held = static_cast<std::size_t>(std::floor(heldout_fraction * idx.size()));
    for (std::size_t k = 0; k < idx.size(); ++k) {
      (k < held ? heldout : train).push_back(corpus[idx[k]]);
    }
  }
}

double ClassifierAccuracy(const ClassifierParams& params,
                          std::span<const LabeledText> data) {
  if (data.empty()) return 0.0;
  std::size_t correct = 0;
  for (const LabeledText& x : data) {
    if (PredictStars(ClassifyRating(params, x.ids)) == x.stars) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

PretrainReport PretrainClassifier(ClassifierParams& params,
                                  std::span<const LabeledText> corpus,
                                  const PretrainOptions& options) {
  RQA_REQUIRE(!corpus.empty(), "PretrainClassifier: empty corpus");
  RQA_REQUIRE(options.batch_size >= 1, "PretrainClassifier: batch_size must be >= 1");
  PretrainReport report;
  std::vector<LabeledText> train, heldout;
  StratifiedSplit(corpus, options.heldout_fraction, options.seed, train, heldout);
  if (train.empty()) train.assign(corpus.begin(), corpus.end());
  report.train_size = train.size();
  report.heldout_size = heldout.size();

  std::array<std::size_t, kNumRatingClasses> counts{};
  for (const LabeledText& x : train) {
    RQA_REQUIRE(x.stars >= 1 && x.stars <= 5 && !x.ids.empty(),
                "PretrainClassifier: bad training record");
    ++counts[x.stars - 1];
  }
  const int majority =
      static_cast<int>(std::max_element(counts.begin(), counts.end()) - counts.begin()) + 1;
  report.single_class =
      std::count_if(counts.begin(), counts.end(), [](std::size_t c) { return c > 0; }) < 2;
  if (!heldout.empty()) {
    report.majority_accuracy =
        static_cast<double>(std::count_if(heldout.begin(), heldout.end(),
                                          [&](const LabeledText& x) {
                                            return x.stars == majority;
                                          })) /
        static_cast<double>(heldout.size());
  }

  ParamSet set;
  params.Register(set);
  if (params.share_embedding) set.Add("classifier.shared_embedding", params.embedding);
  AdamOptimizer optimizer(set, AdamOptions{options.learning_rate});
  std::vector<std::size_t> order(train.size());
  for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng rng(DeriveSeed(options.seed, HashString("pretrain-epoch"), epoch));
    Shuffle(order, rng);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += options.batch_size) {
      const std::size_t end = std::min(order.size(), start + options.batch_size);
      const double scale = 1.0 / static_cast<double>(end - start);
      for (std::size_t k = start; k < end; ++k) {
        const LabeledText& x = train[order[k]];
        Tape tape;
        TapeScope scope(tape);
        const Tensor loss = ClassifierLoss(ClassifyRating(params, x.ids), x.stars);
        epoch_loss += loss.item();
        tape.Backward(Scale(loss, scale));
      }
      optimizer.Step();
    }
    report.epoch_losses.push_back(epoch_loss / static_cast<double>(train.size()));
  }
  report.final_train_loss =
      report.epoch_losses.empty() ? 0.0 : report.epoch_losses.back();
  report.heldout_accuracy = ClassifierAccuracy(params, heldout);
  return report;
}

}  // namespace rqa
