#include "rqa/params.h"

#include <cmath>

#include "rqa/error.h"

namespace rqa {

void ParamSet::Add(std::string name, Tensor tensor) {
  RQA_REQUIRE(Find(name) == nullptr, "duplicate parameter name: " + name);
  entries_.push_back({std::move(name), std::move(tensor)});
}

void ParamSet::Append(const ParamSet& other) {
  for (const auto& e : other.entries_) Add(e.name, e.tensor);
}

std::size_t ParamSet::NumScalars() const {
  std::size_t n = 0;
  for (const auto& e : entries_) n += e.tensor.numel();
  return n;
}

const Tensor* ParamSet::Find(const std::string& name) const {
  for (const auto& e : entries_) {
    if (e.name == name) return &e.tensor;
  }
  return nullptr;
}

void ParamSet::ZeroGrad() {
  for (auto& e : entries_) e.tensor.ZeroGrad();
}

bool ParamSet::AllFinite() const {
  for (const auto& e : entries_) {
    for (double v : e.tensor.data()) {
      if (!std::isfinite(v)) return false;
    }
  }
  return true;
}

Tensor UniformParam(Shape shape, double scale, Rng& rng) {
  std::vector<double> values(NumElements(shape));
  for (double& v : values) v = rng.Uniform(-scale, scale);
  return Tensor::FromData(std::move(shape), std::move(values), true);
}

Tensor ZeroParam(Shape shape) { return Tensor::Zeros(std::move(shape), true); }

Tensor CloneValues(const Tensor& t, bool requires_grad) {
  return Tensor::FromData(t.shape(),
                          std::vector<double>(t.data().begin(), t.data().end()),
                          requires_grad);
}

}  // namespace rqa
