#include "rqa/search.h"

#include <algorithm>

#include "rqa/error.h"

namespace rqa {

double Hypothesis::NormalizedScore() const {
  return tokens.empty() ? log_prob : log_prob / static_cast<double>(tokens.size());
}

std::vector<int> Hypothesis::Surface() const {
  std::vector<int> out;
  for (int t : tokens) {
    if (t != Vocabulary::kEos && t != Vocabulary::kBos) out.push_back(t);
  }
  return out;
}

bool IsSearchable(int token_id) {
  return token_id != Vocabulary::kPad && token_id != Vocabulary::kUnk &&
         token_id != Vocabulary::kBos;
}

bool RanksBefore(const Hypothesis& a, const Hypothesis& b) {
  const double sa = a.NormalizedScore(), sb = b.NormalizedScore();
  if (sa != sb) return sa > sb;
  return a.tokens < b.tokens;
}

namespace {

struct Live {
  Hypothesis hyp;
  Tensor state;
};

}  // namespace

Hypothesis GreedySearch(const AnswerModel& model, const EncodedContext& ctx,
                        std::size_t max_len) {
  RQA_REQUIRE(max_len >= 1, "max_len must be >= 1");
  const AttentionKeys keys = PrecomputeKeys(model.decoder, ctx);
  Tensor h = InitialState(model.decoder, ctx);
  Hypothesis hyp;
  int prev = Vocabulary::kBos;
  while (!hyp.terminated) {
    const StepOutput step =
        DecodeStep(model.decoder, model.encoder.token_embedding, ctx, keys, h, prev);
    h = step.hidden;
    const auto lp = step.log_probs.data();
    // Compared on the running total, exactly as beam search scores
    // extensions, so beam=1 reproduces this path bit for bit.
    int best = -1;
    double best_total = 0.0;
    for (int w = 0; w < static_cast<int>(lp.size()); ++w) {
      const double total = hyp.log_prob + lp[w];
      if (IsSearchable(w) && (best < 0 || total > best_total)) {
        best = w;
        best_total = total;
      }
    }
    hyp.tokens.push_back(best);
    hyp.log_prob = best_total;
    hyp.terminated = best == Vocabulary::kEos || hyp.tokens.size() >= max_len;
    prev = best;
  }
  return hyp;
}

std::vector<int> GreedyDecode(const AnswerModel& model, const EncodedContext& ctx,
                              std::size_t max_len) {
  return GreedySearch(model, ctx, max_len).Surface();
}

std::vector<Hypothesis> BeamSearch(const AnswerModel& model,
                                   const EncodedContext& ctx, std::size_t beam,
                                   std::size_t max_len) {
  RQA_REQUIRE(beam >= 1, "beam must be >= 1");
  RQA_REQUIRE(max_len >= 1, "max_len must be >= 1");
  const AttentionKeys keys = PrecomputeKeys(model.decoder, ctx);
  std::vector<Live> live{{Hypothesis{}, InitialState(model.decoder, ctx)}};
  std::vector<Hypothesis> finished;

  struct Candidate {
    std::size_t parent;
    int token;
    double log_prob;
  };
  auto better = [&live](const Candidate& a, const Candidate& b) {
    if (a.log_prob != b.log_prob) return a.log_prob > b.log_prob;
    // Lexicographic order of the extended token sequences.
    const auto& ta = live[a.parent].hyp.tokens;
    const auto& tb = live[b.parent].hyp.tokens;
    if (a.parent != b.parent && ta != tb) return ta < tb;
    return a.token < b.token;
  };

  while (!live.empty()) {
    std::vector<Candidate> candidates;
    std::vector<Tensor> states(live.size());
    for (std::size_t i = 0; i < live.size(); ++i) {
      const int prev = live[i].hyp.tokens.empty() ? Vocabulary::kBos
                                                   : live[i].hyp.tokens.back();
      const StepOutput step = DecodeStep(model.decoder, model.encoder.token_embedding,
                                         ctx, keys, live[i].state, prev);
      states[i] = step.hidden;
      const auto lp = step.log_probs.data();
      for (int w = 0; w < static_cast<int>(lp.size()); ++w) {
        if (IsSearchable(w)) candidates.push_back({i, w, live[i].hyp.log_prob + lp[w]});
      }
    }
    const std::size_t keep = std::min(beam, candidates.size());
    std::partial_sort(candidates.begin(), candidates.begin() + keep, candidates.end(),
                      better);
    std::vector<Live> next;
    for (std::size_t k = 0; k < keep; ++k) {
      const Candidate& c = candidates[k];
      Hypothesis hyp = live[c.parent].hyp;
      hyp.tokens.push_back(c.token);
      hyp.log_prob = c.log_prob;
      hyp.terminated = c.token == Vocabulary::kEos || hyp.tokens.size() >= max_len;
      if (hyp.terminated) {
        finished.push_back(std::move(hyp));
      } else {
        next.push_back({std::move(hyp), states[c.parent]});
      }
    }
    live = std::move(next);
  }
  // Pruning can drop the greedy path; it always competes in the pool.
  Hypothesis greedy = GreedySearch(model, ctx, max_len);
  const bool seen = std::any_of(finished.begin(), finished.end(), [&](const Hypothesis& h) {
    return h.tokens == greedy.tokens;
  });
  if (!seen) finished.push_back(std::move(greedy));
  std::sort(finished.begin(), finished.end(), RanksBefore);
  return finished;
}

Hypothesis BeamDecode(const AnswerModel& model, const EncodedContext& ctx,
                      std::size_t beam, std::size_t max_len) {
  return BeamSearch(model, ctx, beam, max_len).front();
}

double SequenceLogProb(const AnswerModel& model, const EncodedContext& ctx,
                       std::span<const int> tokens) {
  const AttentionKeys keys = PrecomputeKeys(model.decoder, ctx);
  Tensor h = InitialState(model.decoder, ctx);
  double total = 0.0;
  int prev = Vocabulary::kBos;
  for (int t : tokens) {
    const StepOutput step =
        DecodeStep(model.decoder, model.encoder.token_embedding, ctx, keys, h, prev);
    h = step.hidden;
    total += step.log_probs.data()[t];
    prev = t;
  }
  return total;
}

}  // namespace rqa
