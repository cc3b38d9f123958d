#include "rqa/adam.h"

#include <algorithm>
#include <cmath>

#include "rqa/error.h"

namespace rqa {

void AdamStep(std::span<double> param, std::span<const double> grad,
              AdamMoments& moments, const AdamOptions& options) {
  RQA_REQUIRE(param.size() == grad.size(), "AdamStep: param/grad size mismatch");
  if (moments.first.empty()) {
    moments.first.assign(param.size(), 0.0);
    moments.second.assign(param.size(), 0.0);
  }
  RQA_REQUIRE(moments.first.size() == param.size(), "AdamStep: moment size mismatch");
  const std::int64_t t = ++moments.step;
  const double c1 = 1.0 - std::pow(options.beta1, static_cast<double>(t));
  const double c2 = 1.0 - std::pow(options.beta2, static_cast<double>(t));
  for (std::size_t i = 0; i < param.size(); ++i) {
    const double g = grad[i];
    double& m = moments.first[i];
    double& v = moments.second[i];
    m = options.beta1 * m + (1.0 - options.beta1) * g;
    v = options.beta2 * v + (1.0 - options.beta2) * g * g;
    const double m_hat = m / c1;
    const double v_hat = v / c2;
    param[i] -= options.learning_rate * m_hat / (std::sqrt(v_hat) + options.epsilon);
  }
}

std::size_t ClipGradient(std::span<double> grad, double limit) {
  RQA_REQUIRE(limit > 0.0, "clip limit must be positive");
  std::size_t clipped = 0;
  for (double& g : grad) {
    const double c = std::clamp(g, -limit, limit);
    if (c != g) {
      ++clipped;
      g = c;
    }
  }
  return clipped;
}

void RoundToFloat(std::span<double> values) {
  for (double& v : values) v = static_cast<double>(static_cast<float>(v));
}

AdamOptimizer::AdamOptimizer(ParamSet params, AdamOptions options,
                             bool single_precision_state)
    : params_(std::move(params)),
      options_(options),
      single_precision_state_(single_precision_state),
      moments_(params_.size()) {
  if (single_precision_state_) {
    for (const auto& e : params_.entries()) {
      Tensor t = e.tensor;
      RoundToFloat(t.mutable_data());
    }
  }
}

void AdamOptimizer::Step() {
  for (std::size_t i = 0; i < params_.size(); ++i) {
    Tensor t = params_.entries()[i].tensor;
    AdamStep(t.mutable_data(), t.grad(), moments_[i], options_);
    if (single_precision_state_) {
      RoundToFloat(t.mutable_data());
      RoundToFloat(moments_[i].first);
      RoundToFloat(moments_[i].second);
    }
    t.ZeroGrad();
  }
}

}  // namespace rqa
