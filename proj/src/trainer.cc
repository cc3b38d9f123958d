#include "rqa/trainer.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include <json.hpp>

#include "rqa/error.h"
#include "rqa/random.h"
#include "rqa/search.h"

namespace rqa {

namespace {

ParamSet TrainableParams(const AnswerModel& model,
                         const std::optional<ClassifierParams>& classifier,
                         bool freeze) {
  ParamSet set = model.Params();
  if (classifier.has_value() && !freeze) classifier->Register(set);
  return set;
}

void RoundAll(const ParamSet& set) {
  for (const NamedTensor& e : set.entries()) {
    Tensor t = e.tensor;
    RoundToFloat(t.mutable_data());
  }
}

nlohmann::json StepJson(const StepRecord& r) {
  nlohmann::json j;
  j["type"] = "step";
  j["step"] = r.step;
  j["epoch"] = r.epoch;
  j["gen_loss"] = r.gen_loss;
  j["cls_loss"] = r.cls_loss.has_value() ? nlohmann::json(*r.cls_loss) : nlohmann::json();
  j["total"] = r.total;
  j["clip_fraction"] = r.clip_fraction;
  return j;
}

std::size_t MetadataCount(const Checkpoint& ckpt, const std::string& key) {
  const auto it = ckpt.metadata.find(key);
  if (it == ckpt.metadata.end()) throw FormatError("checkpoint lacks metadata '" + key + "'");
  std::size_t used = 0;
  try {
    const std::size_t v = std::stoul(it->second, &used);
    if (used == it->second.size()) return v;
  } catch (const std::exception&) {
  }
  throw FormatError("checkpoint metadata '" + key + "' is not a count: " + it->second);
}

}  // namespace

std::vector<PreparedExample> Prepare(std::span<const TrainingExample> examples,
                                     const Vocabulary& vocab, std::size_t max_tokens) {
  std::vector<PreparedExample> out;
  out.reserve(examples.size());
  for (const TrainingExample& ex : examples) {
    out.push_back({MakeModelInput(ex, vocab, max_tokens), TargetIds(ex.target, vocab)});
  }
  return out;
}

LossBreakdown ComputeLoss(const AnswerModel& model, const ClassifierParams* classifier,
                          const PreparedExample& example, RatingSymbol rating,
                          double lambda) {
  ModelInput input = example.input;
  input.rating = rating;
  const EncodedContext ctx = model.Encode(input);
  const TeacherForced tf = model.TeacherForce(ctx, example.targets);
  const Tensor gen = GenerationLoss(tf.log_probs, example.targets);
  std::optional<Tensor> cls;
  if (classifier != nullptr && !rating.is_pad() && lambda < 1.0) {
    cls = ClassifierLoss(ClassifyRating(*classifier, Softmax(tf.logits)), rating.stars());
  }
  return CombinedLoss(gen, cls, lambda);
}

Trainer::Trainer(TrainConfig config, AnswerModel model,
                 std::optional<ClassifierParams> classifier, std::string vocab_hash)
    : config_(std::move(config)),
      model_(std::move(model)),
      classifier_(std::move(classifier)),
      vocab_hash_(std::move(vocab_hash)),
      optimizer_(TrainableParams(model_, classifier_, config_.freeze_classifier),
                 AdamOptions{config_.learning_rate}, true) {
  config_.Validate();
  if (classifier_.has_value()) {
    ParamSet all;
    classifier_->Register(all);
    RoundAll(all);
    if (config_.freeze_classifier) frozen_ = all;
  }
}

std::vector<std::size_t> Trainer::EpochOrder(std::size_t epoch, std::size_t n) const {
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  Rng rng(DeriveSeed(config_.seed, HashString("epoch-order"), epoch));
  Shuffle(order, rng);
  return order;
}

RatingSymbol Trainer::AugmentedRating(const PreparedExample& example, std::size_t epoch,
                                      std::size_t index) const {
  Rng rng(DeriveSeed(DeriveSeed(config_.seed, HashString("pad-rating")), epoch, index));
  if (rng.Uniform() < config_.pad_rating_prob) return RatingSymbol::Pad();
  return example.input.rating;
}

StepRecord Trainer::TrainStep(std::span<const PreparedExample> data,
                              std::span<const std::size_t> batch) {
  RQA_REQUIRE(!batch.empty(), "TrainStep: empty batch");
  const ClassifierParams* cls = classifier_.has_value() ? &*classifier_ : nullptr;
  const double scale = 1.0 / static_cast<double>(batch.size());
  StepRecord rec;
  rec.step = step_ + 1;
  rec.epoch = epoch_;
  double cls_sum = 0.0;
  std::size_t cls_count = 0;
  // Fixed reduction order: examples in batch order, one tape each.
  for (std::size_t index : batch) {
    RQA_REQUIRE(index < data.size(), "TrainStep: example index out of range");
    const RatingSymbol rating = AugmentedRating(data[index], epoch_, index);
    Tape tape;
    TapeScope scope(tape);
    const LossBreakdown loss = ComputeLoss(model_, cls, data[index], rating, config_.lambda);
    if (!std::isfinite(loss.total.item())) {
      throw TrainingAborted("non-finite loss at step " + std::to_string(rec.step) +
                            " (example " + std::to_string(index) + ")");
    }
    tape.Backward(Scale(loss.total, scale));
    rec.gen_loss += loss.gen_loss * scale;
    rec.total += loss.total.item() * scale;
    if (loss.cls_loss.has_value()) {
      cls_sum += *loss.cls_loss;
      ++cls_count;
    }
  }
  if (cls_count > 0) rec.cls_loss = cls_sum / static_cast<double>(cls_count);

  const ParamSet& params = optimizer_.params();
  if (!params.AllFinite()) {
    throw TrainingAborted("non-finite parameter at step " + std::to_string(rec.step));
  }
  std::size_t clipped = 0, total = 0;
  for (const NamedTensor& e : params.entries()) {
    Tensor t = e.tensor;
    auto g = t.mutable_grad();
    for (double v : g) {
      if (!std::isfinite(v)) {
        throw TrainingAborted("non-finite gradient in " + e.name + " at step " +
                              std::to_string(rec.step));
      }
    }
    clipped += ClipGradient(g, config_.clip);
    total += g.size();
  }
  rec.clip_fraction = total == 0 ? 0.0 : static_cast<double>(clipped) / total;
  optimizer_.Step();
  frozen_.ZeroGrad();
  step_ = rec.step;
  return rec;
}

double Trainer::ValidationLoss(std::span<const PreparedExample> data) const {
  RQA_REQUIRE(!data.empty(), "ValidationLoss: empty data");
  double sum = 0.0;
  for (const PreparedExample& ex : data) {
    sum += ComputeLoss(model_, nullptr, ex, ex.input.rating, 1.0).gen_loss;
  }
  return sum / static_cast<double>(data.size());
}

TrainResult Trainer::Train(std::span<const PreparedExample> train,
                           std::span<const PreparedExample> valid, std::ostream* log,
                           const Vocabulary* vocab) {
  RQA_REQUIRE(!train.empty(), "Train: no training examples");
  TrainResult result;
  double best = std::numeric_limits<double>::infinity();
  std::size_t stale = 0;
  bool budget_hit = false;
  while (epoch_ < config_.epochs && !budget_hit) {
    const std::vector<std::size_t> order = EpochOrder(epoch_, train.size());
    double epoch_gen = 0.0;
    std::size_t batches = 0;
    while (cursor_ < order.size()) {
      if (config_.max_steps != 0 && step_ >= config_.max_steps) {
        budget_hit = true;
        break;
      }
      const std::size_t end = std::min(order.size(), cursor_ + config_.batch_size);
      const StepRecord rec =
          TrainStep(train, std::span<const std::size_t>(order).subspan(cursor_, end - cursor_));
      cursor_ = end;
      epoch_gen += rec.gen_loss;
      ++batches;
      if (log != nullptr) *log << StepJson(rec).dump() << "\n";
      result.steps.push_back(rec);
    }
    if (budget_hit) break;

    EpochRecord er;
    er.epoch = epoch_;
    er.step = step_;
    er.train_gen_loss = batches == 0 ? 0.0 : epoch_gen / static_cast<double>(batches);
    er.valid_loss = valid.empty() ? er.train_gen_loss : ValidationLoss(valid);
    if (vocab != nullptr && !valid.empty()) {
      for (std::size_t i = 0; i < std::min<std::size_t>(2, valid.size()); ++i) {
        const EncodedContext ctx = model_.Encode(valid[i].input);
        const std::vector<int> ids = GreedyDecode(model_, ctx, config_.max_decode_len);
        er.samples.push_back(Detokenize(vocab->Decode(ids)));
      }
    }
    ++epoch_;
    cursor_ = 0;
    if (log != nullptr) {
      nlohmann::json j;
      j["type"] = "epoch";
      j["epoch"] = er.epoch;
      j["step"] = er.step;
      j["train_gen_loss"] = er.train_gen_loss;
      j["valid_loss"] = er.valid_loss;
      j["samples"] = er.samples;
      *log << j.dump() << "\n";
    }
    result.epochs.push_back(er);
    if (er.valid_loss < best) {
      best = er.valid_loss;
      result.best_epoch = er.epoch;
      result.best_valid_loss = best;
      result.best = Save();
      stale = 0;
    } else if (++stale >= config_.patience && config_.patience > 0) {
      result.stopped_early = true;
      break;
    }
  }
  if (!result.best_epoch.has_value()) result.best = Save();
  return result;
}

Checkpoint Trainer::Save() const {
  Checkpoint ckpt;
  ckpt.config = config_.Serialize();
  ckpt.vocab_hash = vocab_hash_;
  ckpt.step = step_;
  ckpt.metadata["epoch"] = std::to_string(epoch_);
  ckpt.metadata["cursor"] = std::to_string(cursor_);
  ckpt.metadata["seed"] = std::to_string(config_.seed);
  ckpt.metadata["variant"] = ModelVariantName(model_.config().variant);
  ckpt.metadata["vocab_size"] = std::to_string(model_.config().vocab_size);
  ckpt.metadata["classifier"] = classifier_.has_value() ? "true" : "false";
  StoreParams(ckpt, model_.Params());
  if (classifier_.has_value()) {
    ParamSet cls;
    classifier_->Register(cls);
    StoreParams(ckpt, cls);
  }
  StoreMoments(ckpt, optimizer_.params(), optimizer_.moments());
  return ckpt;
}

void Trainer::Restore(const Checkpoint& ckpt) {
  if (ckpt.vocab_hash != vocab_hash_) {
    throw FormatError("checkpoint vocabulary " + ckpt.vocab_hash +
                      " does not match the data vocabulary " + vocab_hash_);
  }
  RestoreParams(ckpt, model_.Params());
  if (classifier_.has_value()) {
    ParamSet cls;
    classifier_->Register(cls);
    RestoreParams(ckpt, cls);
  }
  RestoreMoments(ckpt, optimizer_.params(), optimizer_.moments());
  step_ = ckpt.step;
  epoch_ = MetadataCount(ckpt, "epoch");
  cursor_ = MetadataCount(ckpt, "cursor");
}

AnswerModel LoadModel(const Checkpoint& ckpt, std::size_t vocab_size) {
  const TrainConfig config = TrainConfig::Parse(ckpt.config);
  AnswerModel model = AnswerModel::Create(config.Model(vocab_size), config.seed);
  RestoreParams(ckpt, model.Params());
  return model;
}

ClassifierParams LoadClassifier(const Checkpoint& ckpt, const TrainConfig& config,
                                std::size_t vocab_size) {
  Rng rng(0);
  ClassifierParams cls = ClassifierParams::Create(
      vocab_size, config.classifier_embedding, config.classifier_hidden, rng);
  ParamSet set;
  cls.Register(set);
  RestoreParams(ckpt, set);
  return cls;
}

}  // namespace rqa
