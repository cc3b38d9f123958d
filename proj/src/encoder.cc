#include "rqa/encoder.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "rqa/error.h"

namespace rqa {

EncoderParams EncoderParams::Create(std::size_t vocab_size,
                                    std::size_t embedding_dim,
                                    std::size_t hidden_dim, Rng& rng) {
  RQA_REQUIRE(embedding_dim == hidden_dim,
              "snippet attention multiplies token states with snippet "
              "embeddings, so embedding_dim must equal hidden_dim");
  EncoderParams p;
  p.token_embedding = UniformParam({vocab_size, embedding_dim}, kInitScale, rng);
  p.rating_embedding =
      UniformParam({RatingSymbol::kNumSymbols, embedding_dim}, kInitScale, rng);
  p.forward = GruParams::Create(embedding_dim, hidden_dim, rng);
  p.backward = GruParams::Create(embedding_dim, hidden_dim, rng);
  p.v_alpha1 = UniformParam({3 * hidden_dim}, kInitScale, rng);
  p.v_alpha2 = UniformParam({4 * hidden_dim}, kInitScale, rng);
  p.v_beta1 = UniformParam({embedding_dim}, kInitScale, rng);
  return p;
}

void EncoderParams::Register(ParamSet& set) const {
  set.Add("encoder.token_embedding", token_embedding);
  set.Add("encoder.rating_embedding", rating_embedding);
  forward.Register(set, "encoder.gru_forward");
  backward.Register(set, "encoder.gru_backward");
  set.Add("encoder.v_alpha1", v_alpha1);
  set.Add("encoder.v_alpha2", v_alpha2);
  set.Add("encoder.v_beta1", v_beta1);
}

ReviewBatch ReviewBatch::Pack(std::span<const std::vector<int>> reviews,
                              std::span<const int> ratings, std::size_t max_len) {
  RQA_REQUIRE(reviews.size() == ratings.size(),
              "ReviewBatch: one rating per review required");
  RQA_REQUIRE(max_len >= 1, "ReviewBatch: max_len must be >= 1");
  ReviewBatch b;
  b.num_reviews = reviews.size();
  b.max_len = max_len;
  b.ids.assign(b.num_reviews * max_len, 0);
  b.mask.assign(b.num_reviews * max_len, 0.0);
  b.ratings.assign(ratings.begin(), ratings.end());
  for (std::size_t r = 0; r < reviews.size(); ++r) {
    RQA_REQUIRE(ratings[r] >= 1 && ratings[r] <= 5, "ReviewBatch: rating out of range");
    const std::size_t n = std::min(reviews[r].size(), max_len);
    for (std::size_t t = 0; t < n; ++t) {
      b.ids[r * max_len + t] = reviews[r][t];
      b.mask[r * max_len + t] = 1.0;
    }
  }
  return b;
}

std::size_t ReviewBatch::NumValid() const {
  return static_cast<std::size_t>(std::count(mask.begin(), mask.end(), 1.0));
}

namespace {

// One direction over all reviews at once. Padding only trails real tokens,
// so the state is carried unchanged across padded steps and outputs there
// are zero. Columns that are padding for every review are skipped.
std::vector<Tensor> RunDirection(const GruParams& gru, const Tensor& table,
                                 const ReviewBatch& batch, bool reverse) {
  const std::size_t n = batch.num_reviews, len = batch.max_len;
  const std::size_t h_dim = gru.hidden_dim;
  std::vector<Tensor> outputs(len);
  Tensor h = Tensor::Zeros({n, h_dim});
  std::vector<int> ids(n);
  std::vector<double> col(n);
  for (std::size_t k = 0; k < len; ++k) {
    const std::size_t t = reverse ? len - 1 - k : k;
    bool any = false, all = true;
    for (std::size_t r = 0; r < n; ++r) {
      ids[r] = batch.ids[r * len + t];
      col[r] = batch.mask[r * len + t];
      any |= col[r] != 0.0;
      all &= col[r] != 0.0;
    }
    if (!any) {
      outputs[t] = Tensor::Zeros({n, h_dim});
      continue;
    }
    const Tensor next = GruCell(EmbeddingLookup(table, ids), h, gru);
    if (all) {
      h = next;
      outputs[t] = h;
    } else {
      const Tensor m = Tensor::FromData({n, 1}, col);
      h = Add(h, Mul(m, Add(next, Scale(h, -1.0))));
      outputs[t] = Mul(m, h);
    }
  }
  return outputs;
}

}  // namespace

Tensor EncodeReviews(const EncoderParams& params, const ReviewBatch& batch) {
  RQA_REQUIRE(batch.num_reviews >= 1 && batch.max_len >= 1,
              "EncodeReviews: empty review batch");
  const std::size_t n = batch.num_reviews, h_dim = params.hidden_dim();
  const auto fwd = RunDirection(params.forward, params.token_embedding, batch, false);
  const auto bwd = RunDirection(params.backward, params.token_embedding, batch, true);
  std::vector<Tensor> columns;
  columns.reserve(batch.max_len);
  for (std::size_t t = 0; t < batch.max_len; ++t) {
    columns.push_back(Reshape(Add(fwd[t], bwd[t]), {n, 1, h_dim}));
  }
  return Concat(columns, 1);
}

namespace {

// Row mass of a (masked) softmax, evaluated as sum(e) / sum(e) rather than
// sum(e / Z) so that it comes out as exactly one. Its derivative is zero,
// so it enters the tape as a constant.
std::vector<double> SoftmaxMass(const Tensor& logits, std::span<const double> mask) {
  const std::size_t rows = logits.dim(0), cols = logits.dim(1);
  std::vector<double> mass(rows, 0.0);
  for (std::size_t r = 0; r < rows; ++r) {
    const auto row = logits.data().subspan(r * cols, cols);
    double top = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < cols; ++c) {
      if (mask[c] != 0.0) top = std::max(top, row[c]);
    }
    double total = 0.0;
    for (std::size_t c = 0; c < cols; ++c) {
      if (mask[c] != 0.0) total += std::exp(row[c] - top);
    }
    mass[r] = total / total;
  }
  return mass;
}

}  // namespace

SnippetAttention AttendSnippets(const Tensor& tokens, std::span<const double> mask,
                                const Tensor& snippets, const EncoderParams& params,
                                AttentionForm form) {
  RQA_REQUIRE(tokens.rank() == 2 && snippets.rank() == 2 &&
                  tokens.dim(1) == snippets.dim(1),
              "AttendSnippets: token states " + ShapeString(tokens.shape()) +
                  " and snippets " + ShapeString(snippets.shape()) +
                  " must be [P, H] and [m, H]");
  RQA_REQUIRE(snippets.dim(0) >= 1, "AttendSnippets: no snippet tokens");
  RQA_REQUIRE(mask.size() == tokens.dim(0), "AttendSnippets: mask length mismatch");
  const std::size_t p = tokens.dim(0), m = snippets.dim(0), h = tokens.dim(1);
  const Tensor& v1 = params.v_alpha1;
  const Tensor& v2 = params.v_alpha2;

  // A_ij = v1a.H_i + v1b.S_j + (H_i * v1c).S_j
  const Tensor token_term = Reshape(MatMul(tokens, Slice(v1, 0, h)), {p, 1});
  const Tensor snippet_term = MatMul(snippets, Slice(v1, h, h));
  const Tensor cross = MatMul(Mul(tokens, Slice(v1, 2 * h, h)), Transpose(snippets));
  const Tensor affinity = Add(Add(cross, token_term), snippet_term);

  SnippetAttention out;
  out.review_to_snippet = Softmax(affinity);
  out.snippet_to_review = MaskedSoftmax(Transpose(affinity), mask);
  if (form == AttentionForm::kBidirectional) {
    out.attended_reviews = MatMul(out.review_to_snippet, snippets);
    out.attended_snippets = MatMul(out.snippet_to_review, tokens);
  } else {
    const std::vector<double> all(m, 1.0);
    out.attended_reviews = Mul(Tensor::FromData({p, 1}, SoftmaxMass(affinity, all)), tokens);
    out.attended_snippets =
        Mul(Tensor::FromData({m, 1}, SoftmaxMass(Transpose(affinity), mask)), snippets);
  }
  const Tensor& h_tilde = out.attended_reviews;
  const Tensor pooled = Mean(out.attended_snippets, 0);
  out.gate = Add(Add(MatMul(tokens, Slice(v2, 0, h)), MatMul(h_tilde, Slice(v2, h, h))),
                 Add(MatMul(Mul(tokens, h_tilde), Slice(v2, 2 * h, h)),
                     MatMul(Mul(tokens, pooled), Slice(v2, 3 * h, h))));
  out.gated = Mul(Reshape(out.gate, {p, 1}), tokens);
  return out;
}

Tensor RatingGate(const EncoderParams& params, RatingSymbol query,
                  std::span<const int> review_stars) {
  RQA_REQUIRE(!review_stars.empty(), "RatingGate: no reviews");
  std::vector<int> rows;
  rows.reserve(review_stars.size());
  for (int s : review_stars) rows.push_back(RatingSymbol::Stars(s).index());
  const int q = query.index();
  const Tensor review_emb = EmbeddingLookup(params.rating_embedding, rows);
  const Tensor query_emb = EmbeddingLookup(params.rating_embedding, {&q, 1});
  const Tensor gate = MatMul(Mul(review_emb, query_emb), params.v_beta1);
  return Mul(Reshape(gate, {review_stars.size(), 1}), review_emb);
}

EncodedContext Encode(const EncoderParams& params, const ModelInput& input,
                      EncoderSwitches switches) {
  const ReviewBatch& batch = input.context;
  RQA_REQUIRE(batch.NumValid() >= 1, "Encode: context has no tokens");
  EncodedContext ctx;
  ctx.num_reviews = batch.num_reviews;
  ctx.max_len = batch.max_len;
  ctx.token_mask = batch.mask;
  const std::size_t p = batch.num_reviews * batch.max_len;
  const Tensor h = Reshape(EncodeReviews(params, batch), {p, params.hidden_dim()});
  if (switches.snippets && !input.snippet_ids.empty()) {
    const Tensor s = EmbeddingLookup(params.token_embedding, input.snippet_ids);
    ctx.tokens = AttendSnippets(h, batch.mask, s, params).gated;
  } else {
    ctx.tokens = h;
  }
  if (switches.rating) {
    ctx.ratings = RatingGate(params, input.rating, batch.ratings);
  } else {
    ctx.ratings = Tensor::Zeros({batch.num_reviews, params.embedding_dim()});
  }
  return ctx;
}

}  // namespace rqa
