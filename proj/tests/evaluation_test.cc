#include "rqa/evaluation.h"

#include <map>
#include <sstream>

#include <gtest/gtest.h>
#include <json.hpp>

#include "rqa/baselines.h"
#include "rqa/error.h"
#include "rqa/random.h"

namespace rqa {
namespace {

Review MakeReview(const std::string& text, int stars) {
  return Review{"item", Tokenize(text), stars};
}

TEST(BaselineTest, RandomPick) {
  const std::vector<Review> one{MakeReview("only one", 3)};
  EXPECT_EQ(BaselineRandom(one, 5), one[0].tokens);
  EXPECT_THROW(BaselineRandom({}, 1), ContractViolation);
  EXPECT_THROW(BaselineNnRating({}, 2, 1), ContractViolation);

  const std::vector<Review> pool{MakeReview("a", 1), MakeReview("b", 2), MakeReview("c", 3),
                                 MakeReview("d", 4)};
  EXPECT_EQ(PickRandom(pool, 77), PickRandom(pool, 77));
  std::map<std::size_t, int> counts;
  for (std::uint64_t i = 0; i < 10000; ++i) ++counts[PickRandom(pool, DeriveSeed(9, i))];
  for (std::size_t k = 0; k < 4; ++k) EXPECT_NEAR(counts[k], 2500, 150) << k;
}

TEST(BaselineTest, NnRatingFiltersAndFallsBack) {
  const std::vector<Review> pool{MakeReview("x", 5), MakeReview("y", 3), MakeReview("z", 5)};
  std::map<std::size_t, int> counts;
  for (std::uint64_t i = 0; i < 2000; ++i) {
    const std::size_t k = PickNnRating(pool, 5, DeriveSeed(3, i));
    EXPECT_EQ(pool[k].rating, 5);
    ++counts[k];
  }
  EXPECT_GT(counts[0], 800);
  EXPECT_GT(counts[2], 800);

  for (std::uint64_t i = 0; i < 200; ++i) {
    EXPECT_EQ(PickNnRating(pool, std::nullopt, i), PickRandom(pool, i));
    EXPECT_EQ(PickNnRating(pool, 2, i), PickRandom(pool, i));
  }
  std::map<std::size_t, int> fallback;
  for (std::uint64_t i = 0; i < 3000; ++i) ++fallback[PickNnRating(pool, 2, i)];
  EXPECT_EQ(fallback.size(), 3u);
}

TEST(BaselineTest, FilterNeverMissesWhenMatchExists) {
  Rng rng(4);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<Review> pool;
    for (std::size_t n = 1 + rng.Below(8); n > 0; --n) {
      pool.push_back(MakeReview("w", 1 + static_cast<int>(rng.Below(5))));
    }
    const int stars = 1 + static_cast<int>(rng.Below(5));
    const bool any = std::any_of(pool.begin(), pool.end(),
                                 [&](const Review& r) { return r.rating == stars; });
    const std::size_t k = PickNnRating(pool, stars, rng.Next());
    ASSERT_LT(k, pool.size());
    if (any) {
      EXPECT_EQ(pool[k].rating, stars);
    }
  }
}

std::vector<TrainingExample> TestSet() {
  std::vector<TrainingExample> out;
  const char* texts[] = {"the fabric is soft and thin", "runs small , order a size up",
                         "great color but the zipper broke", "fits true to size"};
  for (int i = 0; i < 4; ++i) {
    TrainingExample ex;
    ex.item_id = "item" + std::to_string(i);
    ex.target = MakeReview(texts[i], 1 + i);
    ex.context = {MakeReview("some other review", 2), MakeReview(texts[(i + 1) % 4], 4)};
    ex.rating = RatingSymbol::Stars(1 + i);
    out.push_back(ex);
  }
  return out;
}

TEST(EvaluationTest, OracleAndEmptySystems) {
  const std::vector<TrainingExample> test = TestSet();
  // The oracle reads the target through a side table: systems only see a
  // blinded copy of each example.
  std::vector<TokenSeq> answers;
  for (const auto& ex : test) answers.push_back(ex.target.tokens);
  bool saw_target = false;
  const std::vector<NamedSystem> systems{
      {"Oracle",
       [&](const TrainingExample& ex, std::size_t i) {
         saw_target |= !ex.target.tokens.empty();
         return answers[i];
       }},
      {"Empty", [](const TrainingExample&, std::size_t) { return TokenSeq{}; }}};
  const EvalReport r = EvaluateSystems(test, systems);
  EXPECT_FALSE(saw_target);
  const SystemReport* oracle = r.Find("Oracle");
  ASSERT_NE(oracle, nullptr);
  for (std::size_t m = 0; m < 6; ++m) {
    if (std::string(kMetricNames[m]) == "METEOR") continue;
    EXPECT_NEAR(oracle->scores[m], 100.0, 1e-9) << kMetricNames[m];
  }
  // METEOR of an identical pair with m matches is 100 (1 - 0.5 / m^3).
  double meteor = 0.0;
  for (const auto& ex : test) {
    const double m = static_cast<double>(ex.target.tokens.size());
    meteor += 100.0 * (1.0 - 0.5 / (m * m * m));
  }
  EXPECT_NEAR(oracle->scores[4], meteor / 4.0, 1e-9);
  for (double s : r.Find("Empty")->scores) EXPECT_EQ(s, 0.0);
}

TEST(EvaluationTest, FailuresScoreZeroAndAreCounted) {
  const std::vector<TrainingExample> test = TestSet();
  const std::vector<NamedSystem> systems{
      {"Flaky", [](const TrainingExample& ex, std::size_t i) -> TokenSeq {
         if (i % 2 == 0) throw std::runtime_error("boom");
         return ex.context[1].tokens;
       }}};
  const EvalReport r = EvaluateSystems(test, systems);
  const SystemReport& s = r.systems.at(0);
  EXPECT_EQ(s.failures, 2u);
  ASSERT_EQ(s.failure_messages.size(), 2u);
  EXPECT_NE(s.failure_messages[0].find("boom"), std::string::npos);
  EXPECT_TRUE(s.examples[0].failed);
  EXPECT_EQ(s.examples[0].rouge_l, 0.0);
  EXPECT_EQ(s.examples[0].bleu.candidate_length, 0.0);
  EXPECT_GT(s.examples[0].bleu.reference_length, 0.0);
  EXPECT_EQ(AggregateScores(s.examples), s.scores);
}

TEST(EvaluationTest, RowOrderAndRendering) {
  const std::vector<TrainingExample> test = TestSet();
  auto echo = [](const TrainingExample& ex, std::size_t) { return ex.context[0].tokens; };
  const std::vector<NamedSystem> systems{{"Ours w/o rating", echo}, {"Extra", echo},
                                         {"Ours", echo},            {"Random", echo},
                                         {"Seq2seq", echo},         {"NN-rating", echo}};
  const EvalReport r = EvaluateSystems(test, systems);
  std::vector<std::string> names;
  for (const auto& s : r.systems) names.push_back(s.name);
  EXPECT_EQ(names, (std::vector<std::string>{"Random", "NN-rating", "Seq2seq", "Ours",
                                             "Ours w/o rating", "Extra"}));
  const std::string table = r.Table();
  EXPECT_LT(table.find("Random"), table.find("NN-rating"));
  EXPECT_NE(table.find("ROUGE-L"), std::string::npos);

  std::istringstream lines(r.JsonLines());
  std::string line;
  std::size_t count = 0;
  while (std::getline(lines, line)) {
    const auto j = nlohmann::json::parse(line);
    EXPECT_TRUE(j.contains("system"));
    EXPECT_TRUE(j.contains("metric"));
    const double v = j.at("score").get<double>();
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 100.0);
    ++count;
  }
  EXPECT_EQ(count, 36u);
}

TEST(EvaluationTest, ScoresRecomputableAndBounded) {
  Rng rng(5);
  const std::vector<TrainingExample> test = TestSet();
  const std::vector<NamedSystem> systems{
      {"Random", [&](const TrainingExample& ex, std::size_t i) {
         return BaselineRandom(ex.context, DeriveSeed(7, i));
       }}};
  const EvalReport r = EvaluateSystems(test, systems);
  const SystemReport& s = r.systems.at(0);
  EXPECT_EQ(AggregateScores(s.examples), s.scores);
  for (double v : s.scores) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 100.0);
  }
}

}  // namespace
}  // namespace rqa
