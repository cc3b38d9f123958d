#ifndef RQA_BASELINES_H_
#define RQA_BASELINES_H_

#include <cstdint>
#include <optional>
#include <span>

#include "rqa/corpus.h"

namespace rqa {

// Retrieval baselines over a candidate pool that already excludes the
// held-out target. Both throw ContractViolation on an empty pool.

// Index of a uniformly chosen review.
std::size_t PickRandom(std::span<const Review> pool, std::uint64_t seed);
// Uniform among reviews with `stars` when any exist, else over the whole pool.
std::size_t PickNnRating(std::span<const Review> pool, std::optional<int> stars,
                         std::uint64_t seed);

TokenSeq BaselineRandom(std::span<const Review> pool, std::uint64_t seed);
TokenSeq BaselineNnRating(std::span<const Review> pool, std::optional<int> stars,
                          std::uint64_t seed);

}  // namespace rqa

#endif  // RQA_BASELINES_H_
