#ifndef RQA_TENSOR_H_
#define RQA_TENSOR_H_

// Dense double-precision tensors with a reverse-mode gradient tape.
//
// Primitives record themselves on the thread's active Tape (see TapeScope)
// when at least one input requires a gradient. Without an active tape they
// only compute forward values, which is how inference runs.

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace rqa {

using Shape = std::vector<std::size_t>;

std::size_t NumElements(const Shape& shape);
std::string ShapeString(const Shape& shape);

struct Node;

class Tensor {
 public:
  Tensor() = default;

  static Tensor Zeros(Shape shape, bool requires_grad = false);
  static Tensor Full(Shape shape, double value);
  static Tensor FromData(Shape shape, std::vector<double> data,
                         bool requires_grad = false);
  static Tensor Scalar(double value);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const;
  std::size_t rank() const { return shape().size(); }
  std::size_t dim(std::size_t axis) const { return shape().at(axis); }
  std::size_t numel() const;

  std::span<const double> data() const;
  // Writable view of the values. Intended for leaves (parameters, inputs);
  // mutating a recorded intermediate invalidates its tape.
  std::span<double> mutable_data();
  double item() const;

  bool requires_grad() const;
  // Empty when requires_grad() is false.
  std::span<const double> grad() const;
  std::span<double> mutable_grad();
  void ZeroGrad();

  // Same node identity.
  bool SameAs(const Tensor& other) const { return node_ == other.node_; }

 private:
  friend class Tape;
  friend class OpBuilder;
  explicit Tensor(std::shared_ptr<Node> node) : node_(std::move(node)) {}

  std::shared_ptr<Node> node_;
};

// Ordered record of primitive applications. Entries are appended as ops
// execute, so each entry's inputs precede it.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // Populates d(loss)/d(leaf) into the grad of every requires_grad leaf
  // reachable from `loss`. Leaf gradients accumulate across calls;
  // intermediate gradients are reset at the start of each call.
  void Backward(const Tensor& loss);

  std::size_t size() const { return entries_.size(); }
  void Clear() { entries_.clear(); }

 private:
  friend class OpBuilder;
  std::vector<std::shared_ptr<Node>> entries_;
};

// Makes `tape` the active tape for the current thread for the scope's
// lifetime. Scopes nest.
class TapeScope {
 public:
  explicit TapeScope(Tape& tape);
  ~TapeScope();
  TapeScope(const TapeScope&) = delete;
  TapeScope& operator=(const TapeScope&) = delete;

 private:
  Tape* previous_;
};

Tape* ActiveTape();

// Backward on the active tape.
void Backward(const Tensor& loss);

// ---- primitives ------------------------------------------------------------

// [..., k] x [k, m] -> [..., m];  [..., k] x [k] -> [...].
Tensor MatMul(const Tensor& a, const Tensor& b);

// Elementwise with numpy-style broadcasting (trailing axes aligned, size-1 or
// missing leading axes broadcast).
Tensor Add(const Tensor& a, const Tensor& b);
Tensor Mul(const Tensor& a, const Tensor& b);
Tensor Scale(const Tensor& a, double factor);

Tensor Sigmoid(const Tensor& x);
Tensor Tanh(const Tensor& x);

// Along the last axis, max-subtracted. -inf entries receive exactly zero
// mass; a row with no finite entry is a contract violation.
Tensor Softmax(const Tensor& x);
Tensor LogSoftmax(const Tensor& x);

// Softmax with positions whose mask value is 0 excluded (set to -inf).
// `mask` has as many entries as the last axis.
Tensor MaskedSoftmax(const Tensor& x, std::span<const double> mask);

// Rows of `table` ([V, d]) selected by ids -> [n, d].
Tensor EmbeddingLookup(const Tensor& table, std::span<const int> ids);

// logits [n, V] with n targets -> per-row losses [n];
// logits [V] with one target -> scalar.
Tensor CrossEntropy(const Tensor& logits, std::span<const int> targets);

// x[i, ids[i]] for x of shape [n, V] -> [n].
Tensor Pick(const Tensor& x, std::span<const int> ids);

Tensor Sum(const Tensor& x);
Tensor Sum(const Tensor& x, std::size_t axis);
Tensor Mean(const Tensor& x);
Tensor Mean(const Tensor& x, std::size_t axis);

Tensor Concat(std::span<const Tensor> parts, std::size_t axis);
Tensor Concat(std::initializer_list<Tensor> parts, std::size_t axis);
// Concatenation along the last axis.
Tensor Concat(std::initializer_list<Tensor> parts);

Tensor Reshape(const Tensor& x, Shape shape);
Tensor Transpose(const Tensor& x);
// x[..., begin:begin+length].
Tensor Slice(const Tensor& x, std::size_t begin, std::size_t length);
// Rows of x along axis 0.
Tensor Rows(const Tensor& x, std::span<const std::size_t> index);

}  // namespace rqa

#endif  // RQA_TENSOR_H_
