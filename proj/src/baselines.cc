#include "rqa/baselines.h"

#include <vector>

#include "rqa/error.h"
#include "rqa/random.h"

namespace rqa {

std::size_t PickRandom(std::span<const Review> pool, std::uint64_t seed) {
  RQA_REQUIRE(!pool.empty(), "random baseline: empty candidate pool");
  Rng rng(DeriveSeed(seed, HashString("baseline-random")));
  return static_cast<std::size_t>(rng.Below(pool.size()));
}

std::size_t PickNnRating(std::span<const Review> pool, std::optional<int> stars,
                         std::uint64_t seed) {
  RQA_REQUIRE(!pool.empty(), "nn-rating baseline: empty candidate pool");
  std::vector<std::size_t> same;
  if (stars.has_value()) {
    for (std::size_t i = 0; i < pool.size(); ++i) {
      if (pool[i].rating == *stars) same.push_back(i);
    }
  }
  if (same.empty()) return PickRandom(pool, seed);
  Rng rng(DeriveSeed(seed, HashString("baseline-nn-rating")));
  return same[rng.Below(same.size())];
}

TokenSeq BaselineRandom(std::span<const Review> pool, std::uint64_t seed) {
  return pool[PickRandom(pool, seed)].tokens;
}

TokenSeq BaselineNnRating(std::span<const Review> pool, std::optional<int> stars,
                          std::uint64_t seed) {
  return pool[PickNnRating(pool, stars, seed)].tokens;
}

}  // namespace rqa
