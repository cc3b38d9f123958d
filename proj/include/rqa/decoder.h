#ifndef RQA_DECODER_H_
#define RQA_DECODER_H_

#include "rqa/encoder.h"
#include "rqa/gru.h"
#include "rqa/params.h"
#include "rqa/tensor.h"

namespace rqa {

// Additive attention scorers: score_p = u . tanh(W_ctx key_p + W_state h + b).
// Output layer: logits = [h; c_H; c_R] W_out + b_out.
struct DecoderParams {
  GruParams gru;          // E -> H
  Tensor w_text_ctx;      // [H, A]
  Tensor w_text_state;    // [H, A]
  Tensor b_text;          // [A]
  Tensor u_text;          // [A]
  Tensor w_rating_ctx;    // [E, A]
  Tensor w_rating_state;  // [H, A]
  Tensor b_rating;        // [A]
  Tensor u_rating;        // [A]
  Tensor w_out;           // [2H + E, V]
  Tensor b_out;           // [V]
  Tensor w_init;          // [H, H]
  Tensor b_init;          // [H]

  static DecoderParams Create(std::size_t vocab_size, std::size_t embedding_dim,
                              std::size_t hidden_dim, std::size_t attention_dim,
                              Rng& rng);
  void Register(ParamSet& set) const;  // "decoder.<name>"

  std::size_t hidden_dim() const { return gru.hidden_dim; }
  std::size_t vocab_size() const { return b_out.dim(0); }
};

// Step-invariant projections of an encoded context.
struct AttentionKeys {
  Tensor text;    // [P, A]  H~_S W_text_ctx + b_text
  Tensor rating;  // [l_r, A]
};

AttentionKeys PrecomputeKeys(const DecoderParams& params, const EncodedContext& ctx);

// h_0 = tanh(mean of valid H~_S rows . W_init + b_init).
Tensor InitialState(const DecoderParams& params, const EncodedContext& ctx);

struct StepOutput {
  Tensor hidden;            // [H]
  Tensor logits;            // [V]
  Tensor log_probs;         // [V], log softmax of logits
  Tensor text_attention;    // [P], zero on padding
  Tensor rating_attention;  // [l_r]
};

// One autoregressive step: h = GRU(emb(y_prev), h_prev), then text and
// rating attention from h, then the vocabulary projection.
StepOutput DecodeStep(const DecoderParams& params, const Tensor& token_embedding,
                      const EncodedContext& ctx, const AttentionKeys& keys,
                      const Tensor& h_prev, int y_prev);

}  // namespace rqa

#endif  // RQA_DECODER_H_
