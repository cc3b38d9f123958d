#ifndef RQA_OBJECTIVE_H_
#define RQA_OBJECTIVE_H_

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rqa/gru.h"
#include "rqa/params.h"
#include "rqa/tensor.h"

namespace rqa {

inline constexpr int kNumRatingClasses = 5;

// Auxiliary sentiment classifier: embeddings -> GRU -> dense to 5 logits
// (class c is rating c+1).
struct ClassifierParams {
  bool share_embedding = false;
  Tensor embedding;  // [V, E_c] (the generator's table when shared)
  GruParams gru;     // E_c -> H_c
  Tensor w_out;      // [H_c, 5]
  Tensor b_out;      // [5]

  static ClassifierParams Create(std::size_t vocab_size, std::size_t embedding_dim,
                                 std::size_t hidden_dim, Rng& rng);
  // Uses `table` as the input embedding instead of a private one.
  static ClassifierParams CreateShared(const Tensor& table, std::size_t hidden_dim,
                                       Rng& rng);
  // "classifier.<name>"; a shared embedding is not registered here.
  void Register(ParamSet& set) const;
};

// Logits over ratings 1..5 for hard token ids.
Tensor ClassifyRating(const ClassifierParams& params, std::span<const int> ids);
// Logits for a sequence of token distributions [T, V]; each step's input is
// the expected embedding sum_w p(w) emb(w).
Tensor ClassifyRating(const ClassifierParams& params, const Tensor& distributions);

// Predicted stars (argmax, lowest class on ties).
int PredictStars(const Tensor& logits);

// Mean over unmasked steps of -log_probs[t, targets[t]]. An empty mask means
// every step counts.
Tensor GenerationLoss(const Tensor& log_probs, std::span<const int> targets,
                      std::span<const double> step_mask = {});

// -log p(stars) for one-hot targets.
Tensor ClassifierLoss(const Tensor& logits, int stars);

struct LossBreakdown {
  Tensor total;
  double gen_loss = 0.0;
  std::optional<double> cls_loss;  // absent for PAD-rated examples
  double lambda = 1.0;
};

// total = lambda * gen + (1 - lambda) * cls, or lambda * gen without cls.
LossBreakdown CombinedLoss(const Tensor& gen, const std::optional<Tensor>& cls,
                           double lambda);

struct LabeledText {
  std::vector<int> ids;
  int stars = 0;
};

struct PretrainOptions {
  std::size_t epochs = 5;
  double learning_rate = 0.001;
  std::size_t batch_size = 16;
  double heldout_fraction = 0.1;
  std::uint64_t seed = 1;
};

struct PretrainReport {
  double heldout_accuracy = 0.0;
  double majority_accuracy = 0.0;  // most frequent training class on held-out
  double final_train_loss = 0.0;
  std::size_t train_size = 0;
  std::size_t heldout_size = 0;
  bool single_class = false;
  std::vector<double> epoch_losses;
};

// Stratified split: per rating, the first ceil-free floor(fraction * n)
// examples of a seeded shuffle are held out.
void StratifiedSplit(std::span<const LabeledText> corpus, double heldout_fraction,
                     std::uint64_t seed, std::vector<LabeledText>& train,
                     std::vector<LabeledText>& heldout);

double ClassifierAccuracy(const ClassifierParams& params,
                          std::span<const LabeledText> data);

// Minimizes rating cross entropy on hard-token inputs with Adam.
PretrainReport PretrainClassifier(ClassifierParams& params,
                                  std::span<const LabeledText> corpus,
                                  const PretrainOptions& options);

}  // namespace rqa

#endif  // RQA_OBJECTIVE_H_
