#include "rqa/decoder.h"

#include "rqa/error.h"

namespace rqa {

DecoderParams DecoderParams::Create(std::size_t vocab_size,
                                    std::size_t embedding_dim,
                                    std::size_t hidden_dim,
                                    std::size_t attention_dim, Rng& rng) {
  DecoderParams p;
  p.gru = GruParams::Create(embedding_dim, hidden_dim, rng);
  p.w_text_ctx = UniformParam({hidden_dim, attention_dim}, kInitScale, rng);
  p.w_text_state = UniformParam({hidden_dim, attention_dim}, kInitScale, rng);
  p.b_text = ZeroParam({attention_dim});
  p.u_text = UniformParam({attention_dim}, kInitScale, rng);
  p.w_rating_ctx = UniformParam({embedding_dim, attention_dim}, kInitScale, rng);
  p.w_rating_state = UniformParam({hidden_dim, attention_dim}, kInitScale, rng);
  p.b_rating = ZeroParam({attention_dim});
  p.u_rating = UniformParam({attention_dim}, kInitScale, rng);
  p.w_out = UniformParam({2 * hidden_dim + embedding_dim, vocab_size}, kInitScale, rng);
  p.b_out = ZeroParam({vocab_size});
  p.w_init = UniformParam({hidden_dim, hidden_dim}, kInitScale, rng);
  p.b_init = ZeroParam({hidden_dim});
  return p;
}

void DecoderParams::Register(ParamSet& set) const {
  gru.Register(set, "decoder.gru");
  set.Add("decoder.w_text_ctx", w_text_ctx);
  set.Add("decoder.w_text_state", w_text_state);
  set.Add("decoder.b_text", b_text);
  set.Add("decoder.u_text", u_text);
  set.Add("decoder.w_rating_ctx", w_rating_ctx);
  set.Add("decoder.w_rating_state", w_rating_state);
  set.Add("decoder.b_rating", b_rating);
  set.Add("decoder.u_rating", u_rating);
  set.Add("decoder.w_out", w_out);
  set.Add("decoder.b_out", b_out);
  set.Add("decoder.w_init", w_init);
  set.Add("decoder.b_init", b_init);
}

AttentionKeys PrecomputeKeys(const DecoderParams& params, const EncodedContext& ctx) {
  return AttentionKeys{
      Add(MatMul(ctx.tokens, params.w_text_ctx), params.b_text),
      Add(MatMul(ctx.ratings, params.w_rating_ctx), params.b_rating)};
}

Tensor InitialState(const DecoderParams& params, const EncodedContext& ctx) {
  double valid = 0.0;
  for (double m : ctx.token_mask) valid += m;
  RQA_REQUIRE(valid > 0.0, "InitialState: context has no valid tokens");
  std::vector<double> weights(ctx.token_mask);
  for (double& w : weights) w /= valid;
  const std::size_t p = weights.size();
  const Tensor pooled = MatMul(Tensor::FromData({p}, std::move(weights)), ctx.tokens);
  return Tanh(Add(MatMul(pooled, params.w_init), params.b_init));
}

StepOutput DecodeStep(const DecoderParams& params, const Tensor& token_embedding,
                      const EncodedContext& ctx, const AttentionKeys& keys,
                      const Tensor& h_prev, int y_prev) {
  RQA_REQUIRE(h_prev.rank() == 1 && h_prev.dim(0) == params.hidden_dim(),
              "DecodeStep: state must be [" + std::to_string(params.hidden_dim()) +
                  "], got " + ShapeString(h_prev.shape()));
  const std::size_t e = token_embedding.dim(1);
  StepOutput out;
  const Tensor x = Reshape(EmbeddingLookup(token_embedding, {&y_prev, 1}), {e});
  out.hidden = GruCell(x, h_prev, params.gru);

  const Tensor text_scores =
      MatMul(Tanh(Add(keys.text, MatMul(out.hidden, params.w_text_state))), params.u_text);
  out.text_attention = MaskedSoftmax(text_scores, ctx.token_mask);
  const Tensor text_ctx = MatMul(out.text_attention, ctx.tokens);

  const Tensor rating_scores = MatMul(
      Tanh(Add(keys.rating, MatMul(out.hidden, params.w_rating_state))), params.u_rating);
  out.rating_attention = Softmax(rating_scores);
  const Tensor rating_ctx = MatMul(out.rating_attention, ctx.ratings);

  out.logits =
      Add(MatMul(Concat({out.hidden, text_ctx, rating_ctx}), params.w_out), params.b_out);
  out.log_probs = LogSoftmax(out.logits);
  return out;
}

}  // namespace rqa
