#ifndef RQA_PARAMS_H_
#define RQA_PARAMS_H_

#include <string>
#include <utility>
#include <vector>

#include "rqa/random.h"
#include "rqa/tensor.h"

namespace rqa {

struct NamedTensor {
  std::string name;
  Tensor tensor;
};

// Ordered, name-addressable view over learned tensors. Names follow the
// checkpoint convention `<module>.<name>`, e.g. `encoder.v_alpha1`.
class ParamSet {
 public:
  void Add(std::string name, Tensor tensor);
  void Append(const ParamSet& other);

  const std::vector<NamedTensor>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  std::size_t NumScalars() const;

  // Null when absent.
  const Tensor* Find(const std::string& name) const;

  void ZeroGrad();
  bool AllFinite() const;

 private:
  std::vector<NamedTensor> entries_;
};

// Learned tensor initialized uniformly in [-scale, scale].
Tensor UniformParam(Shape shape, double scale, Rng& rng);
// Learned tensor initialized to zero.
Tensor ZeroParam(Shape shape);

// Independent deep copy of values (no grad, no tape history).
Tensor CloneValues(const Tensor& t, bool requires_grad);

inline constexpr double kInitScale = 0.08;

}  // namespace rqa

#endif  // RQA_PARAMS_H_
