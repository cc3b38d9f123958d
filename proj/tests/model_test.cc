#include "rqa/model.h"

#include <cmath>
#include <functional>
#include <limits>

#include <gtest/gtest.h>

#include "rqa/error.h"
#include "rqa/search.h"
#include "oracles.h"
#include "test_util.h"

namespace rqa {
namespace {

using testing::SmallModel;

// Redraws every parameter uniformly in [-scale, scale].
void Scramble(const AnswerModel& m, std::uint64_t seed, double scale) {
  Rng rng(seed);
  for (const auto& e : m.Params().entries()) {
    Tensor t = e.tensor;
    for (double& v : t.mutable_data()) v = rng.Uniform(-scale, scale);
  }
}

AnswerModel RandomModel(std::size_t vocab, std::uint64_t seed, double scale = 1.0,
                        ModelVariant variant = ModelVariant::kFull) {
  return testing::ScrambledModel(vocab, seed, scale, variant);
}

TEST(ModelVariantTest, ParseAndName) {
  for (auto v : {ModelVariant::kFull, ModelVariant::kNoRating, ModelVariant::kSeq2seq}) {
    EXPECT_EQ(ParseModelVariant(ModelVariantName(v)), v);
  }
  EXPECT_THROW(ParseModelVariant("ours"), ContractViolation);
}

TEST(ModelTest, TargetIdsEndWithEos) {
  const Vocabulary vocab = testing::MakeVocab({"good", "fit"});
  Review r;
  r.tokens = {"good", "zzz", "fit"};
  const std::vector<int> ids = TargetIds(r, vocab);
  ASSERT_EQ(ids.size(), 4u);
  EXPECT_EQ(ids[1], Vocabulary::kUnk);
  EXPECT_EQ(ids.back(), Vocabulary::kEos);
}

TEST(DecoderTest, ZeroParamsGiveUniformSteps) {
  const AnswerModel m = SmallModel(9, 1);
  Scramble(m, 1, 0.0);
  Rng rng(1);
  const EncodedContext ctx = m.Encode(testing::RandomInput(rng, 9, 2, 4, 2));
  const std::vector<int> targets{4, 5, 6};
  const TeacherForced tf = m.TeacherForce(ctx, targets);
  for (double v : tf.log_probs.data()) EXPECT_NEAR(v, -std::log(9.0), 1e-15);
}

TEST(DecoderTest, SingleValidTokenTakesAllAttention) {
  const AnswerModel m = RandomModel(9, 2);
  const std::vector<std::vector<int>> ids{{7}};
  const std::vector<int> stars{4};
  ModelInput in;
  in.context = ReviewBatch::Pack(ids, stars, 3);
  in.rating = RatingSymbol::Stars(4);
  const EncodedContext ctx = m.Encode(in);
  const AttentionKeys keys = PrecomputeKeys(m.decoder, ctx);
  const StepOutput s = DecodeStep(m.decoder, m.encoder.token_embedding, ctx, keys,
                                  InitialState(m.decoder, ctx), Vocabulary::kBos);
  EXPECT_EQ(s.text_attention.data()[0], 1.0);
  EXPECT_EQ(s.text_attention.data()[1], 0.0);
  EXPECT_EQ(s.text_attention.data()[2], 0.0);
  EXPECT_EQ(s.rating_attention.data()[0], 1.0);
}

TEST(DecoderTest, DistributionsNormalizedAndDeterministic) {
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const AnswerModel m = RandomModel(10, 100 + trial, 1.5);
    const EncodedContext ctx = m.Encode(testing::RandomInput(rng, 10, 3, 5, 2));
    const AttentionKeys keys = PrecomputeKeys(m.decoder, ctx);
    Tensor h = InitialState(m.decoder, ctx);
    int prev = Vocabulary::kBos;
    for (int t = 0; t < 4; ++t) {
      const StepOutput a = DecodeStep(m.decoder, m.encoder.token_embedding, ctx, keys, h, prev);
      const StepOutput b = DecodeStep(m.decoder, m.encoder.token_embedding, ctx, keys, h, prev);
      EXPECT_TRUE(std::equal(a.log_probs.data().begin(), a.log_probs.data().end(),
                             b.log_probs.data().begin()));
      double mass = 0.0;
      for (double v : a.log_probs.data()) mass += std::exp(v);
      EXPECT_NEAR(mass, 1.0, 1e-9);
      double text = 0.0;
      for (std::size_t p = 0; p < ctx.token_mask.size(); ++p) {
        if (ctx.token_mask[p] == 0.0) {
          EXPECT_EQ(a.text_attention.data()[p], 0.0);
        }
        text += a.text_attention.data()[p];
      }
      EXPECT_NEAR(text, 1.0, 1e-9);
      double rating = 0.0;
      for (double v : a.rating_attention.data()) rating += v;
      EXPECT_NEAR(rating, 1.0, 1e-9);
      h = a.hidden;
      prev = 4 + static_cast<int>(rng.Below(6));
    }
  }
}

TEST(DecoderTest, TeacherForcedGradients) {
  Rng rng(4);
  for (int trial = 0; trial < 10; ++trial) {
    AnswerModel m = SmallModel(8, 200 + trial, 3);
    Scramble(m, 300 + trial, 0.7);
    const ModelInput in = testing::RandomInput(rng, 8, 2, 3, 2);
    const std::vector<int> targets{5, 6, Vocabulary::kEos};
    const std::uint64_t proj = rng.Next();
    auto f = [&] {
      return testing::Project(m.TeacherForce(m.Encode(in), targets).log_probs, proj);
    };
    const DecoderParams& d = m.decoder;
    const EncoderParams& e = m.encoder;
    EXPECT_LT(testing::GradientError(f, {d.w_text_ctx, d.w_text_state, d.u_text, d.b_text}),
              1e-4);
    EXPECT_LT(testing::GradientError(f, {d.w_rating_ctx, d.w_rating_state, d.u_rating}), 1e-4);
    EXPECT_LT(testing::GradientError(f, {d.w_out, d.b_out, d.w_init}), 1e-4);
    EXPECT_LT(testing::GradientError(f, {e.v_alpha1, e.v_alpha2, e.v_beta1}), 1e-4);
  }
}

TEST(VariantTest, DisabledPathsIgnoreTheirInputs) {
  Rng rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    ModelInput in = testing::RandomInput(rng, 10, 2, 4, 3);
    in.rating = RatingSymbol::Stars(1);
    ModelInput other = in;
    other.rating = RatingSymbol::Stars(5);
    ModelInput bare = in;
    bare.snippet_ids = {4};
    const std::vector<int> targets{4, 5, Vocabulary::kEos};
    auto lp = [&](const AnswerModel& m, const ModelInput& x) {
      const Tensor t = m.TeacherForce(m.Encode(x), targets).log_probs;
      return std::vector<double>(t.data().begin(), t.data().end());
    };
    const AnswerModel full = RandomModel(10, 400 + trial);
    const AnswerModel no_rating = RandomModel(10, 400 + trial, 1.0, ModelVariant::kNoRating);
    const AnswerModel seq = RandomModel(10, 400 + trial, 1.0, ModelVariant::kSeq2seq);
    EXPECT_NE(lp(full, in), lp(full, other));
    EXPECT_EQ(lp(no_rating, in), lp(no_rating, other));
    EXPECT_NE(lp(no_rating, in), lp(no_rating, bare));
    EXPECT_EQ(lp(seq, in), lp(seq, other));
    EXPECT_EQ(lp(seq, in), lp(seq, bare));
  }
}

EncodedContext RandomContext(const AnswerModel& m, Rng& rng) {
  return m.Encode(testing::RandomInput(rng, m.config().vocab_size, 2, 4, 2));
}

TEST(GreedyTest, EosFirstGivesEmptyOutput) {
  const AnswerModel m = RandomModel(10, 6);
  Tensor(m.decoder.b_out).mutable_data()[Vocabulary::kEos] = 100.0;
  Rng rng(6);
  const EncodedContext ctx = RandomContext(m, rng);
  EXPECT_TRUE(GreedyDecode(m, ctx, 15).empty());
  const Hypothesis h = GreedySearch(m, ctx, 15);
  EXPECT_EQ(h.tokens, std::vector<int>{Vocabulary::kEos});
}

TEST(GreedyTest, LengthCap) {
  const AnswerModel m = RandomModel(10, 7);
  Tensor(m.decoder.b_out).mutable_data()[Vocabulary::kEos] = -100.0;
  Rng rng(7);
  const EncodedContext ctx = RandomContext(m, rng);
  const Hypothesis h = GreedySearch(m, ctx, 3);
  EXPECT_EQ(h.tokens.size(), 3u);
  EXPECT_TRUE(h.terminated);
  EXPECT_EQ(GreedyDecode(m, ctx, 3).size(), 3u);
  for (int t : h.tokens) EXPECT_TRUE(IsSearchable(t));
  EXPECT_THROW(GreedySearch(m, ctx, 0), ContractViolation);
}

TEST(GreedyTest, NeverEmitsExcludedSpecials) {
  const AnswerModel m = RandomModel(10, 8);
  for (int id : {Vocabulary::kPad, Vocabulary::kUnk, Vocabulary::kBos}) {
    Tensor(m.decoder.b_out).mutable_data()[id] = 50.0;
  }
  Rng rng(8);
  const Hypothesis h = GreedySearch(m, RandomContext(m, rng), 6);
  for (int t : h.tokens) EXPECT_TRUE(IsSearchable(t));
  const Hypothesis b = BeamDecode(m, RandomContext(m, rng), 3, 6);
  for (int t : b.tokens) EXPECT_TRUE(IsSearchable(t));
}

TEST(BeamTest, BeamOneEqualsGreedy) {
  Rng rng(9);
  for (int trial = 0; trial < 100; ++trial) {
    const AnswerModel m = RandomModel(12, 500 + trial, 1.5);
    const EncodedContext ctx = RandomContext(m, rng);
    const Hypothesis g = GreedySearch(m, ctx, 8);
    const Hypothesis b = BeamDecode(m, ctx, 1, 8);
    EXPECT_EQ(g.tokens, b.tokens);
    EXPECT_EQ(g.log_prob, b.log_prob);
  }
}

TEST(BeamTest, PoolInvariants) {
  Rng rng(10);
  for (int trial = 0; trial < 30; ++trial) {
    const AnswerModel m = RandomModel(9, 600 + trial, 1.5);
    const EncodedContext ctx = RandomContext(m, rng);
    const std::size_t max_len = 1 + rng.Below(5);
    const std::vector<Hypothesis> pool = BeamSearch(m, ctx, 1 + rng.Below(5), max_len);
    ASSERT_FALSE(pool.empty());
    for (std::size_t k = 0; k < pool.size(); ++k) {
      const Hypothesis& h = pool[k];
      EXPECT_TRUE(h.terminated);
      EXPECT_TRUE(h.tokens.back() == Vocabulary::kEos || h.tokens.size() == max_len);
      EXPECT_LE(h.tokens.size(), max_len);
      EXPECT_NEAR(h.log_prob, SequenceLogProb(m, ctx, h.tokens), 1e-12);
      double prev = 0.0;
      for (std::size_t n = 1; n <= h.tokens.size(); ++n) {
        const double lp = SequenceLogProb(m, ctx, std::span(h.tokens).first(n));
        EXPECT_LE(lp, prev);
        prev = lp;
      }
      if (k > 0) {
        EXPECT_FALSE(RanksBefore(h, pool[k - 1]));
      }
    }
  }
}

TEST(BeamTest, BeamFiveDominatesGreedy) {
  Rng rng(11);
  int violations = 0;
  for (double scale : {0.5, 1.5, 3.0}) {
    for (int trial = 0; trial < 150; ++trial) {
      const AnswerModel m = RandomModel(12, 700 + trial, scale);
      const EncodedContext ctx = RandomContext(m, rng);
      const Hypothesis g = GreedySearch(m, ctx, 15);
      double best = -std::numeric_limits<double>::infinity();
      for (const Hypothesis& h : BeamSearch(m, ctx, 5, 15)) best = std::max(best, h.log_prob);
      if (best < g.log_prob) ++violations;
    }
  }
  EXPECT_EQ(violations, 0);
}

TEST(BeamTest, MatchesExhaustiveSearchOnToyVocabulary) {
  Rng rng(12);
  int beam5_matches = 0;
  for (int trial = 0; trial < 100; ++trial) {
    // Two words plus EOS are searchable.
    const AnswerModel m = RandomModel(Vocabulary::kNumSpecials + 2, 800 + trial, 1.5);
    const EncodedContext ctx = RandomContext(m, rng);
    for (std::size_t max_len : {1u, 2u, 3u}) {
      const std::vector<Hypothesis> all = testing::AllHypotheses(m, ctx, max_len);
      ASSERT_LE(all.size(), 13u + 27u);
      const Hypothesis best = *std::min_element(all.begin(), all.end(), RanksBefore);
      const Hypothesis wide = BeamDecode(m, ctx, all.size(), max_len);
      EXPECT_EQ(wide.tokens, best.tokens);
      EXPECT_NEAR(wide.log_prob, best.log_prob, 1e-12);
      if (max_len == 2) {
        beam5_matches += BeamDecode(m, ctx, 5, max_len).tokens == best.tokens;
      }
    }
  }
  EXPECT_EQ(beam5_matches, 100);
}

}  // namespace
}  // namespace rqa
