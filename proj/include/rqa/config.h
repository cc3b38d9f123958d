#ifndef RQA_CONFIG_H_
#define RQA_CONFIG_H_

#include <cstdint>
#include <string>

#include "rqa/corpus.h"
#include "rqa/model.h"

namespace rqa {

struct TrainConfig {
  // Optimization.
  double learning_rate = 0.0002;
  double clip = 5.0;  // every gradient component is clamped into [-clip, clip]
  std::size_t batch_size = 16;
  std::size_t epochs = 30;
  std::size_t patience = 5;
  std::size_t max_steps = 0;  // 0: no cap
  double lambda = 0.8;
  double pad_rating_prob = 0.1;
  std::uint64_t seed = 1;

  // Model.
  std::size_t hidden_dim = 512;
  std::size_t embedding_dim = 512;
  std::size_t attention_dim = 512;
  std::size_t layers = 1;
  ModelVariant variant = ModelVariant::kFull;

  // Decoding.
  std::size_t beam = 5;
  std::size_t max_decode_len = 15;

  // Data.
  ExampleLimits limits;
  std::size_t max_snippets = 5;
  std::size_t min_reviews = 20;
  std::size_t min_freq = 5;
  std::size_t max_vocab = 30000;

  // Auxiliary classifier.
  std::size_t classifier_hidden = 256;
  std::size_t classifier_embedding = 256;
  bool freeze_classifier = true;
  std::size_t classifier_epochs = 5;
  double classifier_lr = 0.001;

  // Throws ContractViolation on out-of-range values.
  void Validate() const;
  ModelConfig Model(std::size_t vocab_size) const;

  // One `key=value` per line, in a fixed key order.
  std::string Serialize() const;
  // Applies `key=value` lines on top of the current values. Blank lines and
  // lines starting with '#' are ignored; unknown keys throw FormatError.
  void Apply(const std::string& text);
  void Set(const std::string& key, const std::string& value);

  static TrainConfig Parse(const std::string& text);
  static TrainConfig Load(const std::string& path);
};

}  // namespace rqa

#endif  // RQA_CONFIG_H_
