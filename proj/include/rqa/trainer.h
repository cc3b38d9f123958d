#ifndef RQA_TRAINER_H_
#define RQA_TRAINER_H_

#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "rqa/adam.h"
#include "rqa/checkpoint.h"
#include "rqa/config.h"
#include "rqa/model.h"
#include "rqa/objective.h"

namespace rqa {

struct PreparedExample {
  ModelInput input;
  std::vector<int> targets;  // target ids + EOS
};

std::vector<PreparedExample> Prepare(std::span<const TrainingExample> examples,
                                     const Vocabulary& vocab, std::size_t max_tokens);

// Teacher-forced loss of one example under `rating`. The classifier term is
// computed from the per-step output distributions and skipped for PAD or when
// `classifier` is null.
LossBreakdown ComputeLoss(const AnswerModel& model, const ClassifierParams* classifier,
                          const PreparedExample& example, RatingSymbol rating,
                          double lambda);

struct StepRecord {
  std::uint64_t step = 0;
  std::size_t epoch = 0;
  double gen_loss = 0.0;   // batch means
  std::optional<double> cls_loss;
  double total = 0.0;
  double clip_fraction = 0.0;
};

struct EpochRecord {
  std::size_t epoch = 0;
  std::uint64_t step = 0;
  double train_gen_loss = 0.0;
  double valid_loss = 0.0;
  std::vector<std::string> samples;
};

struct TrainResult {
  std::vector<StepRecord> steps;
  std::vector<EpochRecord> epochs;
  std::optional<std::size_t> best_epoch;
  double best_valid_loss = 0.0;
  bool stopped_early = false;
  Checkpoint best;  // state after the best epoch (or the last state if no epoch finished)
};

class Trainer {
 public:
  // Rounds every model and classifier value to float so that checkpoints
  // hold exactly the in-memory state.
  Trainer(TrainConfig config, AnswerModel model,
          std::optional<ClassifierParams> classifier, std::string vocab_hash);

  // One optimizer update over `batch` (indices into `data`).
  StepRecord TrainStep(std::span<const PreparedExample> data,
                       std::span<const std::size_t> batch);

  // Mean per-example generation loss, ratings as stored, no augmentation.
  double ValidationLoss(std::span<const PreparedExample> data) const;

  // Epoch loop from the current (epoch, cursor): shuffled batches, a
  // validation pass per epoch, best-state retention and early stopping.
  // Step and epoch records go to `log` as JSON lines when non-null.
  TrainResult Train(std::span<const PreparedExample> train,
                    std::span<const PreparedExample> valid, std::ostream* log = nullptr,
                    const Vocabulary* vocab = nullptr);

  // Example order for an epoch; a pure function of (seed, epoch).
  std::vector<std::size_t> EpochOrder(std::size_t epoch, std::size_t n) const;
  // Training-time rating of example `index` in `epoch` (PAD with probability
  // pad_rating_prob).
  RatingSymbol AugmentedRating(const PreparedExample& example, std::size_t epoch,
                               std::size_t index) const;

  Checkpoint Save() const;
  // Refuses a checkpoint built for another vocabulary or model shape.
  void Restore(const Checkpoint& ckpt);

  const AnswerModel& model() const { return model_; }
  const std::optional<ClassifierParams>& classifier() const { return classifier_; }
  const TrainConfig& config() const { return config_; }
  std::uint64_t step() const { return step_; }
  std::size_t epoch() const { return epoch_; }
  std::size_t cursor() const { return cursor_; }
  const ParamSet& trained_params() const { return optimizer_.params(); }

 private:
  TrainConfig config_;
  AnswerModel model_;
  std::optional<ClassifierParams> classifier_;
  std::string vocab_hash_;
  AdamOptimizer optimizer_;
  ParamSet frozen_;  // classifier params when frozen; grads discarded
  std::uint64_t step_ = 0;
  std::size_t epoch_ = 0;
  std::size_t cursor_ = 0;  // position within the current epoch's order
};

// Parameters of model and (optional) classifier, restored from a checkpoint.
AnswerModel LoadModel(const Checkpoint& ckpt, std::size_t vocab_size);
ClassifierParams LoadClassifier(const Checkpoint& ckpt, const TrainConfig& config,
                                std::size_t vocab_size);

}  // namespace rqa

#endif  // RQA_TRAINER_H_
