#ifndef RQA_METRICS_H_
#define RQA_METRICS_H_

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace rqa {

using Tokens = std::vector<std::string>;

inline constexpr double kBleuEpsilon = 1e-9;
inline constexpr double kRougeBeta = 1.2;

// Clipped n-gram matches and totals for orders 1..4 plus lengths; corpus
// BLEU is a function of the summed statistics.
struct BleuStats {
  std::array<double, 4> matches{};
  std::array<double, 4> totals{};
  double candidate_length = 0.0;
  double reference_length = 0.0;

  BleuStats& operator+=(const BleuStats& other);
};

BleuStats ComputeBleuStats(std::span<const std::string> candidate,
                           std::span<const std::string> reference);
// Cumulative BLEU-n in [0, 100].
double BleuFromStats(const BleuStats& stats, int n);
double CorpusBleu(std::span<const Tokens> candidates, std::span<const Tokens> references,
                  int n);

std::size_t LcsLength(std::span<const std::string> a, std::span<const std::string> b);
// LCS-based F-measure in [0, 100]; 0 when either side is empty.
double RougeL(std::span<const std::string> candidate,
              std::span<const std::string> reference);

// Light suffix stripper used by the METEOR stem stage.
std::string Stem(const std::string& word);

struct MeteorStats {
  std::size_t matches = 0;
  std::size_t chunks = 0;
  std::size_t candidate_length = 0;
  std::size_t reference_length = 0;
};

MeteorStats MeteorAlign(std::span<const std::string> candidate,
                        std::span<const std::string> reference);
double MeteorFromStats(const MeteorStats& stats);
double Meteor(std::span<const std::string> candidate,
              std::span<const std::string> reference);

}  // namespace rqa

#endif  // RQA_METRICS_H_
