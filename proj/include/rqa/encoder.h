#ifndef RQA_ENCODER_H_
#define RQA_ENCODER_H_

#include <span>
#include <vector>

#include "rqa/corpus.h"
#include "rqa/gru.h"
#include "rqa/params.h"
#include "rqa/tensor.h"

namespace rqa {

struct EncoderParams {
  Tensor token_embedding;   // [V, E], shared with the decoder input
  Tensor rating_embedding;  // [6, E]: stars 1..5, then PAD
  GruParams forward;        // E -> H
  GruParams backward;       // E -> H
  Tensor v_alpha1;          // [3H] review/snippet affinity
  Tensor v_alpha2;          // [4H] per-token context gate
  Tensor v_beta1;           // [E] rating similarity

  static EncoderParams Create(std::size_t vocab_size, std::size_t embedding_dim,
                              std::size_t hidden_dim, Rng& rng);
  void Register(ParamSet& set) const;  // "encoder.<name>"

  std::size_t embedding_dim() const { return token_embedding.dim(1); }
  std::size_t hidden_dim() const { return forward.hidden_dim; }
};

// Context reviews as a PAD-filled [num_reviews, max_len] id matrix.
struct ReviewBatch {
  std::size_t num_reviews = 0;
  std::size_t max_len = 0;
  std::vector<int> ids;
  std::vector<double> mask;  // 1 for a real token, 0 for padding
  std::vector<int> ratings;  // stars per review

  // Reviews longer than max_len keep their first max_len tokens.
  static ReviewBatch Pack(std::span<const std::vector<int>> reviews,
                          std::span<const int> ratings, std::size_t max_len);
  std::size_t NumValid() const;
};

struct ModelInput {
  ReviewBatch context;
  std::vector<int> snippet_ids;  // all snippet tokens, concatenated
  RatingSymbol rating = RatingSymbol::Pad();
};

// Per-token H = GRU_fwd + GRU_bwd for every review independently.
// Returns [num_reviews, max_len, H]; padding positions are zero.
Tensor EncodeReviews(const EncoderParams& params, const ReviewBatch& batch);

enum class AttentionForm {
  kBidirectional,  // H~_i = sum_j a^H_ij S_j,  S~_j = sum_i a^S_ji H_i
  kLiteral,        // H~_i = sum_j a^H_ij H_i,  S~_j = sum_i a^S_ji S_j
};

struct SnippetAttention {
  Tensor gated;              // [P, H]: gate_i * H_i
  Tensor review_to_snippet;  // a^H, [P, m]; rows sum to 1
  Tensor snippet_to_review;  // a^S, [m, P]; rows sum to 1 over valid tokens
  Tensor attended_reviews;   // H~, [P, H]
  Tensor attended_snippets;  // S~, [m, H]
  Tensor gate;               // [P]
};

// Review tokens `tokens` ([P, H], padding rows masked out by `mask`) against
// snippet token embeddings `snippets` ([m, H], m >= 1):
//   A_ij  = v_a1 . [H_i; S_j; H_i*S_j]
//   a^H_i = softmax_j A_ij,  a^S_j = softmax_i A_ij over valid i
//   g_i   = v_a2 . [H_i; H~_i; H_i*H~_i; H_i*mean_j(S~_j)]
SnippetAttention AttendSnippets(const Tensor& tokens, std::span<const double> mask,
                                const Tensor& snippets, const EncoderParams& params,
                                AttentionForm form = AttentionForm::kBidirectional);

// R~_t = (v_b1 . (emb(query) * emb(R_t))) * emb(R_t)  -> [num_reviews, E].
Tensor RatingGate(const EncoderParams& params, RatingSymbol query,
                  std::span<const int> review_stars);

struct EncodedContext {
  Tensor tokens;                    // H~_S flattened to [l_r * l_s, H]
  std::vector<double> token_mask;   // [l_r * l_s]
  Tensor ratings;                   // R~, [l_r, E]
  std::size_t num_reviews = 0;
  std::size_t max_len = 0;
};

struct EncoderSwitches {
  bool snippets = true;  // false: H~_S = H
  bool rating = true;    // false: R~ = 0
};

EncodedContext Encode(const EncoderParams& params, const ModelInput& input,
                      EncoderSwitches switches = {});

}  // namespace rqa

#endif  // RQA_ENCODER_H_
