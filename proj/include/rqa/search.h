#ifndef RQA_SEARCH_H_
#define RQA_SEARCH_H_

#include <span>
#include <vector>

#include "rqa/model.h"

namespace rqa {

struct Hypothesis {
  std::vector<int> tokens;  // emitted ids, EOS included when emitted
  double log_prob = 0.0;
  bool terminated = false;

  // log_prob / number of emitted tokens.
  double NormalizedScore() const;
  // tokens without EOS.
  std::vector<int> Surface() const;
};

// PAD, UNK and BOS are never emitted during search.
bool IsSearchable(int token_id);

// Argmax each step (lowest id on ties) until EOS or max_len tokens.
Hypothesis GreedySearch(const AnswerModel& model, const EncodedContext& ctx,
                        std::size_t max_len);
std::vector<int> GreedyDecode(const AnswerModel& model, const EncodedContext& ctx,
                              std::size_t max_len);

// Beam search over summed log-probabilities. Each step keeps the `beam` best
// extensions of all live hypotheses; extensions that end (EOS or max_len)
// leave the beam for the finished pool, which also always holds the greedy
// hypothesis. Returns the finished pool ranked by
// length-normalized score, ties broken by lexicographic token order.
std::vector<Hypothesis> BeamSearch(const AnswerModel& model,
                                   const EncodedContext& ctx, std::size_t beam,
                                   std::size_t max_len);
Hypothesis BeamDecode(const AnswerModel& model, const EncodedContext& ctx,
                      std::size_t beam, std::size_t max_len);

// Sum of step log-probabilities of `tokens` under teacher forcing.
double SequenceLogProb(const AnswerModel& model, const EncodedContext& ctx,
                       std::span<const int> tokens);

// True when `a` should rank before `b` in the final ordering.
bool RanksBefore(const Hypothesis& a, const Hypothesis& b);

}  // namespace rqa

#endif  // RQA_SEARCH_H_
