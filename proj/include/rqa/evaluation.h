#ifndef RQA_EVALUATION_H_
#define RQA_EVALUATION_H_

#include <array>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "rqa/corpus.h"
#include "rqa/metrics.h"

namespace rqa {

// Maps an example (its target is never read) to candidate answer tokens.
using SystemFn = std::function<TokenSeq(const TrainingExample& example, std::size_t index)>;

struct NamedSystem {
  std::string name;  // display name, e.g. "NN-rating"
  SystemFn fn;
};

inline constexpr std::array<const char*, 6> kMetricNames = {
    "BLEU-1", "BLEU-2", "BLEU-3", "BLEU-4", "METEOR", "ROUGE-L"};

// Table row order.
inline constexpr std::array<const char*, 5> kSystemOrder = {
    "Random", "NN-rating", "Seq2seq", "Ours", "Ours w/o rating"};

struct ExampleScore {
  bool failed = false;
  BleuStats bleu;
  MeteorStats meteor;
  double meteor_score = 0.0;
  double rouge_l = 0.0;
};

struct SystemReport {
  std::string name;
  std::array<double, 6> scores{};  // kMetricNames order, each in [0, 100]
  std::vector<ExampleScore> examples;
  std::size_t failures = 0;
  std::vector<std::string> failure_messages;
};

// Corpus scores from stored per-example statistics.
std::array<double, 6> AggregateScores(std::span<const ExampleScore> examples);

struct EvalReport {
  std::vector<SystemReport> systems;  // kSystemOrder first, others after

  const SystemReport* Find(const std::string& name) const;
  std::string Table() const;
  // One JSON record per (system, metric).
  std::string JsonLines() const;
};

// A system throwing on an example scores 0 there and the failure is counted.
EvalReport EvaluateSystems(std::span<const TrainingExample> test,
                           std::span<const NamedSystem> systems);

}  // namespace rqa

#endif  // RQA_EVALUATION_H_
