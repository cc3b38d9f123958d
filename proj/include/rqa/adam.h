#ifndef RQA_ADAM_H_
#define RQA_ADAM_H_

#include <cstdint>
#include <span>
#include <vector>

#include "rqa/params.h"

namespace rqa {

struct AdamOptions {
  double learning_rate = 0.0002;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamMoments {
  std::vector<double> first;
  std::vector<double> second;
  std::int64_t step = 0;
};

// One bias-corrected Adam update of `param` in place.
void AdamStep(std::span<double> param, std::span<const double> grad,
              AdamMoments& moments, const AdamOptions& options);

// Clamps every component into [-limit, limit]; returns how many changed.
std::size_t ClipGradient(std::span<double> grad, double limit);

// Adam over a ParamSet. With `single_precision_state`, parameters and
// moments are rounded to float after each update so that the state written
// to a (float32) checkpoint is exactly the state in memory.
class AdamOptimizer {
 public:
  AdamOptimizer(ParamSet params, AdamOptions options,
                bool single_precision_state = false);

  // Applies the accumulated grads, then zeroes them.
  void Step();

  const ParamSet& params() const { return params_; }
  std::vector<AdamMoments>& moments() { return moments_; }
  const std::vector<AdamMoments>& moments() const { return moments_; }
  const AdamOptions& options() const { return options_; }

 private:
  ParamSet params_;
  AdamOptions options_;
  bool single_precision_state_;
  std::vector<AdamMoments> moments_;
};

// Rounds each value to the nearest float.
void RoundToFloat(std::span<double> values);

}  // namespace rqa

#endif  // RQA_ADAM_H_
