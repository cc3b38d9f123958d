#include "rqa/model.h"

#include "rqa/error.h"
#include "rqa/random.h"

namespace rqa {

ModelVariant ParseModelVariant(const std::string& name) {
  if (name == "full") return ModelVariant::kFull;
  if (name == "no-rating") return ModelVariant::kNoRating;
  if (name == "seq2seq") return ModelVariant::kSeq2seq;
  throw ContractViolation("unknown model variant '" + name +
                          "' (expected full, no-rating or seq2seq)");
}

std::string ModelVariantName(ModelVariant v) {
  switch (v) {
    case ModelVariant::kFull: return "full";
    case ModelVariant::kNoRating: return "no-rating";
    case ModelVariant::kSeq2seq: return "seq2seq";
  }
  return "full";
}

AnswerModel AnswerModel::Create(const ModelConfig& config, std::uint64_t seed) {
  RQA_REQUIRE(config.vocab_size > Vocabulary::kNumSpecials,
              "model vocabulary must contain more than the special tokens");
  Rng rng(DeriveSeed(seed, HashString("model-init")));
  AnswerModel m;
  m.config_ = config;
  m.encoder = EncoderParams::Create(config.vocab_size, config.embedding_dim,
                                    config.hidden_dim, rng);
  m.decoder = DecoderParams::Create(config.vocab_size, config.embedding_dim,
                                    config.hidden_dim, config.attention_dim, rng);
  return m;
}

EncoderSwitches AnswerModel::switches() const {
  return EncoderSwitches{config_.variant != ModelVariant::kSeq2seq,
                         config_.variant == ModelVariant::kFull};
}

ParamSet AnswerModel::Params() const {
  ParamSet set;
  encoder.Register(set);
  decoder.Register(set);
  return set;
}

EncodedContext AnswerModel::Encode(const ModelInput& input) const {
  return rqa::Encode(encoder, input, switches());
}

TeacherForced AnswerModel::TeacherForce(const EncodedContext& ctx,
                                        std::span<const int> targets) const {
  RQA_REQUIRE(!targets.empty(), "TeacherForce: empty target");
  const AttentionKeys keys = PrecomputeKeys(decoder, ctx);
  Tensor h = InitialState(decoder, ctx);
  std::vector<Tensor> logits, log_probs;
  logits.reserve(targets.size());
  log_probs.reserve(targets.size());
  const std::size_t v = config_.vocab_size;
  int prev = Vocabulary::kBos;
  for (int target : targets) {
    StepOutput step = DecodeStep(decoder, encoder.token_embedding, ctx, keys, h, prev);
    h = step.hidden;
    logits.push_back(Reshape(step.logits, {1, v}));
    log_probs.push_back(Reshape(step.log_probs, {1, v}));
    prev = target;
  }
  return TeacherForced{Concat(logits, 0), Concat(log_probs, 0)};
}

ModelInput MakeModelInput(std::span<const Review> context,
                          std::span<const TokenSeq> snippets, RatingSymbol rating,
                          const Vocabulary& vocab, std::size_t max_tokens) {
  RQA_REQUIRE(!context.empty(), "MakeModelInput: empty context");
  std::vector<std::vector<int>> ids;
  std::vector<int> stars;
  for (const Review& r : context) {
    ids.push_back(vocab.Encode(Truncate(r.tokens, max_tokens)));
    stars.push_back(r.rating);
  }
  ModelInput input;
  input.context = ReviewBatch::Pack(ids, stars, max_tokens);
  for (const TokenSeq& s : snippets) {
    for (int id : vocab.Encode(s)) input.snippet_ids.push_back(id);
  }
  input.rating = rating;
  return input;
}

ModelInput MakeModelInput(const TrainingExample& example, const Vocabulary& vocab,
                          std::size_t max_tokens) {
  return MakeModelInput(example.context, example.snippets, example.rating, vocab,
                        max_tokens);
}

std::vector<int> TargetIds(const Review& target, const Vocabulary& vocab) {
  std::vector<int> ids = vocab.Encode(target.tokens);
  ids.push_back(Vocabulary::kEos);
  return ids;
}

}  // namespace rqa
