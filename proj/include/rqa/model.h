#ifndef RQA_MODEL_H_
#define RQA_MODEL_H_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "rqa/corpus.h"
#include "rqa/decoder.h"
#include "rqa/encoder.h"

namespace rqa {

enum class ModelVariant {
  kFull,      // snippet attention + rating gating
  kNoRating,  // rating path zeroed
  kSeq2seq,   // neither: the decoder attends over raw encoder states
};

ModelVariant ParseModelVariant(const std::string& name);  // full|no-rating|seq2seq
std::string ModelVariantName(ModelVariant v);

struct ModelConfig {
  std::size_t vocab_size = 0;
  std::size_t embedding_dim = 512;
  std::size_t hidden_dim = 512;
  std::size_t attention_dim = 512;
  ModelVariant variant = ModelVariant::kFull;
};

struct TeacherForced {
  Tensor logits;     // [T, V]
  Tensor log_probs;  // [T, V]
};

class AnswerModel {
 public:
  static AnswerModel Create(const ModelConfig& config, std::uint64_t seed);

  const ModelConfig& config() const { return config_; }
  EncoderSwitches switches() const;
  ParamSet Params() const;

  EncodedContext Encode(const ModelInput& input) const;
  // Feeds BOS, targets[0], ..., targets[T-2] and returns the T step outputs.
  TeacherForced TeacherForce(const EncodedContext& ctx,
                             std::span<const int> targets) const;

  EncoderParams encoder;
  DecoderParams decoder;

 private:
  ModelConfig config_;
};

// Context reviews and snippets mapped through the vocabulary. The rating is
// the example's conditioning symbol.
ModelInput MakeModelInput(const TrainingExample& example, const Vocabulary& vocab,
                          std::size_t max_tokens);
ModelInput MakeModelInput(std::span<const Review> context,
                          std::span<const TokenSeq> snippets, RatingSymbol rating,
                          const Vocabulary& vocab, std::size_t max_tokens);

// Target review ids followed by EOS.
std::vector<int> TargetIds(const Review& target, const Vocabulary& vocab);

}  // namespace rqa

#endif  // RQA_MODEL_H_
