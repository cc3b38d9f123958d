#include "rqa/tensor.h"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "rqa/error.h"

namespace rqa {

struct Node {
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;
  bool requires_grad = false;
  bool recorded = false;
  std::vector<std::shared_ptr<Node>> inputs;
  std::function<void(Node&)> backward;
};

namespace {

thread_local Tape* active_tape = nullptr;

using RowMat =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMat>;
using MutMap = Eigen::Map<RowMat>;

const std::shared_ptr<Node>& Checked(const std::shared_ptr<Node>& n) {
  RQA_REQUIRE(n != nullptr, "use of an undefined tensor");
  return n;
}

}  // namespace

std::size_t NumElements(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         std::multiplies<>());
}

std::string ShapeString(const Shape& shape) {
  std::ostringstream out;
  out << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out << ", ";
    out << shape[i];
  }
  out << ']';
  return out.str();
}

// Builds op results and records them on the active tape.
class OpBuilder {
 public:
  static const Node& node(const Tensor& t) { return *Checked(t.node_); }
  static Node& node(Tensor& t) { return *Checked(t.node_); }

  static Tensor Make(Shape shape, std::vector<double> value,
                     std::initializer_list<Tensor> inputs,
                     std::function<void(Node&)> backward) {
    return Make(std::move(shape), std::move(value),
                std::vector<Tensor>(inputs), std::move(backward));
  }

  static Tensor Make(Shape shape, std::vector<double> value,
                     const std::vector<Tensor>& inputs,
                     std::function<void(Node&)> backward) {
    auto out = std::make_shared<Node>();
    out->shape = std::move(shape);
    out->value = std::move(value);
    Tape* tape = active_tape;
    bool needs_grad = false;
    if (tape != nullptr) {
      for (const Tensor& t : inputs) needs_grad |= node(t).requires_grad;
    }
    if (needs_grad) {
      out->requires_grad = true;
      out->recorded = true;
      out->grad.assign(out->value.size(), 0.0);
      out->inputs.reserve(inputs.size());
      for (const Tensor& t : inputs) out->inputs.push_back(t.node_);
      out->backward = std::move(backward);
      tape->entries_.push_back(out);
    }
    return Tensor(std::move(out));
  }
};

namespace {

const Node& N(const Tensor& t) { return OpBuilder::node(t); }

// Index maps for elementwise broadcasting.
struct Broadcast {
  Shape out;
  bool same = false;
  std::vector<std::size_t> ia, ib;
};

Broadcast MakeBroadcast(const Shape& a, const Shape& b, const char* op) {
  Broadcast bc;
  if (a == b) {
    bc.out = a;
    bc.same = true;
    return bc;
  }
  const std::size_t rank = std::max(a.size(), b.size());
  bc.out.assign(rank, 1);
  auto dim_at = [rank](const Shape& s, std::size_t d) -> std::size_t {
    const std::size_t offset = rank - s.size();
    return d < offset ? 1 : s[d - offset];
  };
  for (std::size_t d = 0; d < rank; ++d) {
    std::size_t da = dim_at(a, d), db = dim_at(b, d);
    if (da != db && da != 1 && db != 1) {
      throw ContractViolation(std::string(op) + ": incompatible shapes " +
                              ShapeString(a) + " and " + ShapeString(b));
    }
    bc.out[d] = std::max(da, db);
  }
  auto strides = [&](const Shape& s) {
    std::vector<std::size_t> st(rank, 0);
    std::size_t stride = 1;
    for (std::size_t d = rank; d-- > 0;) {
      std::size_t dim = dim_at(s, d);
      st[d] = dim == 1 ? 0 : stride;
      stride *= dim;
    }
    return st;
  };
  const auto sa = strides(a), sb = strides(b);
  const std::size_t total = NumElements(bc.out);
  bc.ia.resize(total);
  bc.ib.resize(total);
  std::vector<std::size_t> counter(rank, 0);
  std::size_t pa = 0, pb = 0;
  for (std::size_t k = 0; k < total; ++k) {
    bc.ia[k] = pa;
    bc.ib[k] = pb;
    for (std::size_t d = rank; d-- > 0;) {
      ++counter[d];
      pa += sa[d];
      pb += sb[d];
      if (counter[d] < bc.out[d]) break;
      pa -= sa[d] * counter[d];
      pb -= sb[d] * counter[d];
      counter[d] = 0;
    }
  }
  return bc;
}

std::size_t LastDim(const Shape& s) { return s.empty() ? 1 : s.back(); }

}  // namespace

// ---- Tensor ----------------------------------------------------------------

Tensor Tensor::Zeros(Shape shape, bool requires_grad) {
  auto n = std::make_shared<Node>();
  n->value.assign(NumElements(shape), 0.0);
  n->shape = std::move(shape);
  n->requires_grad = requires_grad;
  if (requires_grad) n->grad.assign(n->value.size(), 0.0);
  return Tensor(std::move(n));
}

Tensor Tensor::Full(Shape shape, double value) {
  Tensor t = Zeros(std::move(shape));
  std::fill(t.node_->value.begin(), t.node_->value.end(), value);
  return t;
}

Tensor Tensor::FromData(Shape shape, std::vector<double> data,
                        bool requires_grad) {
  RQA_REQUIRE(NumElements(shape) == data.size(),
              "FromData: shape " + ShapeString(shape) + " needs " +
                  std::to_string(NumElements(shape)) + " values, got " +
                  std::to_string(data.size()));
  auto n = std::make_shared<Node>();
  n->shape = std::move(shape);
  n->value = std::move(data);
  n->requires_grad = requires_grad;
  if (requires_grad) n->grad.assign(n->value.size(), 0.0);
  return Tensor(std::move(n));
}

Tensor Tensor::Scalar(double value) { return FromData({}, {value}); }

const Shape& Tensor::shape() const { return Checked(node_)->shape; }
std::size_t Tensor::numel() const { return Checked(node_)->value.size(); }
std::span<const double> Tensor::data() const { return Checked(node_)->value; }
std::span<double> Tensor::mutable_data() { return Checked(node_)->value; }

double Tensor::item() const {
  RQA_REQUIRE(numel() == 1, "item() on tensor of shape " + ShapeString(shape()));
  return node_->value[0];
}

bool Tensor::requires_grad() const { return Checked(node_)->requires_grad; }
std::span<const double> Tensor::grad() const { return Checked(node_)->grad; }
std::span<double> Tensor::mutable_grad() { return Checked(node_)->grad; }

void Tensor::ZeroGrad() {
  auto& g = Checked(node_)->grad;
  std::fill(g.begin(), g.end(), 0.0);
}

// ---- Tape ------------------------------------------------------------------

void Tape::Backward(const Tensor& loss) {
  const Node& root = N(loss);
  RQA_REQUIRE(root.value.size() == 1,
              "backward requires a scalar loss, got shape " +
                  ShapeString(root.shape));
  if (!root.requires_grad) return;
  for (auto& e : entries_) std::fill(e->grad.begin(), e->grad.end(), 0.0);
  loss.node_->grad[0] += 1.0;
  for (auto it = entries_.rbegin(); it != entries_.rend(); ++it) {
    Node& n = **it;
    if (n.backward) n.backward(n);
  }
}

TapeScope::TapeScope(Tape& tape) : previous_(active_tape) {
  active_tape = &tape;
}
TapeScope::~TapeScope() { active_tape = previous_; }

Tape* ActiveTape() { return active_tape; }

void Backward(const Tensor& loss) {
  RQA_REQUIRE(active_tape != nullptr, "Backward: no active tape");
  active_tape->Backward(loss);
}

// ---- primitives ------------------------------------------------------------

Tensor MatMul(const Tensor& a, const Tensor& b) {
  const Shape& sa = N(a).shape;
  const Shape& sb = N(b).shape;
  RQA_REQUIRE(!sa.empty() && (sb.size() == 1 || sb.size() == 2),
              "MatMul: unsupported shapes " + ShapeString(sa) + " x " +
                  ShapeString(sb));
  const std::size_t k = sa.back();
  RQA_REQUIRE(sb[0] == k, "MatMul: inner dimensions differ, " +
                              ShapeString(sa) + " x " + ShapeString(sb));
  const std::size_t n = N(a).value.size() / k;
  const std::size_t m = sb.size() == 2 ? sb[1] : 1;
  Shape out_shape(sa.begin(), sa.end() - 1);
  if (sb.size() == 2) out_shape.push_back(m);
  std::vector<double> out(n * m);
  MutMap(out.data(), n, m).noalias() =
      ConstMap(N(a).value.data(), n, k) * ConstMap(N(b).value.data(), k, m);
  return OpBuilder::Make(std::move(out_shape), std::move(out), {a, b},
                         [n, k, m](Node& self) {
                           Node& na = *self.inputs[0];
                           Node& nb = *self.inputs[1];
                           ConstMap g(self.grad.data(), n, m);
                           if (na.requires_grad) {
                             MutMap(na.grad.data(), n, k).noalias() +=
                                 g * ConstMap(nb.value.data(), k, m).transpose();
                           }
                           if (nb.requires_grad) {
                             MutMap(nb.grad.data(), k, m).noalias() +=
                                 ConstMap(na.value.data(), n, k).transpose() * g;
                           }
                         });
}

namespace {

template <typename Fwd, typename BwdA, typename BwdB>
Tensor Elementwise(const Tensor& a, const Tensor& b, const char* name, Fwd fwd,
                   BwdA da, BwdB db) {
  Broadcast bc = MakeBroadcast(N(a).shape, N(b).shape, name);
  const auto& va = N(a).value;
  const auto& vb = N(b).value;
  const std::size_t total = NumElements(bc.out);
  std::vector<double> out(total);
  if (bc.same) {
    for (std::size_t k = 0; k < total; ++k) out[k] = fwd(va[k], vb[k]);
  } else {
    for (std::size_t k = 0; k < total; ++k) {
      out[k] = fwd(va[bc.ia[k]], vb[bc.ib[k]]);
    }
  }
  Shape shape = bc.out;
  return OpBuilder::Make(
      std::move(shape), std::move(out), {a, b},
      [bc = std::move(bc), da, db](Node& self) {
        Node& na = *self.inputs[0];
        Node& nb = *self.inputs[1];
        const std::size_t total = self.grad.size();
        for (std::size_t k = 0; k < total; ++k) {
          const std::size_t ia = bc.same ? k : bc.ia[k];
          const std::size_t ib = bc.same ? k : bc.ib[k];
          const double g = self.grad[k];
          if (na.requires_grad) na.grad[ia] += da(g, na.value[ia], nb.value[ib]);
          if (nb.requires_grad) nb.grad[ib] += db(g, na.value[ia], nb.value[ib]);
        }
      });
}

}  // namespace

Tensor Add(const Tensor& a, const Tensor& b) {
  return Elementwise(
      a, b, "Add", [](double x, double y) { return x + y; },
      [](double g, double, double) { return g; },
      [](double g, double, double) { return g; });
}

Tensor Mul(const Tensor& a, const Tensor& b) {
  return Elementwise(
      a, b, "Mul", [](double x, double y) { return x * y; },
      [](double g, double, double y) { return g * y; },
      [](double g, double x, double) { return g * x; });
}

Tensor Scale(const Tensor& a, double factor) {
  std::vector<double> out(N(a).value);
  for (double& v : out) v *= factor;
  return OpBuilder::Make(N(a).shape, std::move(out), {a}, [factor](Node& self) {
    Node& in = *self.inputs[0];
    for (std::size_t k = 0; k < self.grad.size(); ++k) {
      in.grad[k] += self.grad[k] * factor;
    }
  });
}

Tensor Sigmoid(const Tensor& x) {
  std::vector<double> out(N(x).value.size());
  const auto& v = N(x).value;
  for (std::size_t k = 0; k < out.size(); ++k) {
    if (v[k] >= 0) {
      out[k] = 1.0 / (1.0 + std::exp(-v[k]));
    } else {
      const double e = std::exp(v[k]);
      out[k] = e / (1.0 + e);
    }
  }
  return OpBuilder::Make(N(x).shape, std::move(out), {x}, [](Node& self) {
    Node& in = *self.inputs[0];
    for (std::size_t k = 0; k < self.grad.size(); ++k) {
      const double y = self.value[k];
      in.grad[k] += self.grad[k] * y * (1.0 - y);
    }
  });
}

Tensor Tanh(const Tensor& x) {
  std::vector<double> out(N(x).value);
  for (double& v : out) v = std::tanh(v);
  return OpBuilder::Make(N(x).shape, std::move(out), {x}, [](Node& self) {
    Node& in = *self.inputs[0];
    for (std::size_t k = 0; k < self.grad.size(); ++k) {
      const double y = self.value[k];
      in.grad[k] += self.grad[k] * (1.0 - y * y);
    }
  });
}

namespace {

// Returns the row max; rejects rows without a finite entry.
double RowMax(const double* row, std::size_t cols) {
  double mx = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < cols; ++j) mx = std::max(mx, row[j]);
  RQA_REQUIRE(std::isfinite(mx), "softmax: row has no finite entry");
  return mx;
}

}  // namespace

Tensor Softmax(const Tensor& x) {
  const std::size_t cols = LastDim(N(x).shape);
  const auto& v = N(x).value;
  const std::size_t rows = v.size() / cols;
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < rows; ++i) {
    const double* row = v.data() + i * cols;
    double* dst = out.data() + i * cols;
    const double mx = RowMax(row, cols);
    double z = 0.0;
    for (std::size_t j = 0; j < cols; ++j) {
      dst[j] = std::exp(row[j] - mx);
      z += dst[j];
    }
    for (std::size_t j = 0; j < cols; ++j) dst[j] /= z;
  }
  return OpBuilder::Make(N(x).shape, std::move(out), {x}, [rows, cols](Node& self) {
    Node& in = *self.inputs[0];
    for (std::size_t i = 0; i < rows; ++i) {
      const double* y = self.value.data() + i * cols;
      const double* g = self.grad.data() + i * cols;
      double dot = 0.0;
      for (std::size_t j = 0; j < cols; ++j) dot += g[j] * y[j];
      for (std::size_t j = 0; j < cols; ++j) {
        in.grad[i * cols + j] += y[j] * (g[j] - dot);
      }
    }
  });
}

Tensor LogSoftmax(const Tensor& x) {
  const std::size_t cols = LastDim(N(x).shape);
  const auto& v = N(x).value;
  const std::size_t rows = v.size() / cols;
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < rows; ++i) {
    const double* row = v.data() + i * cols;
    const double mx = RowMax(row, cols);
    double z = 0.0;
    for (std::size_t j = 0; j < cols; ++j) z += std::exp(row[j] - mx);
    const double lse = mx + std::log(z);
    for (std::size_t j = 0; j < cols; ++j) out[i * cols + j] = row[j] - lse;
  }
  return OpBuilder::Make(N(x).shape, std::move(out), {x}, [rows, cols](Node& self) {
    Node& in = *self.inputs[0];
    for (std::size_t i = 0; i < rows; ++i) {
      const double* y = self.value.data() + i * cols;
      const double* g = self.grad.data() + i * cols;
      double gsum = 0.0;
      for (std::size_t j = 0; j < cols; ++j) gsum += g[j];
      for (std::size_t j = 0; j < cols; ++j) {
        in.grad[i * cols + j] += g[j] - std::exp(y[j]) * gsum;
      }
    }
  });
}

Tensor MaskedSoftmax(const Tensor& x, std::span<const double> mask) {
  const std::size_t cols = LastDim(N(x).shape);
  RQA_REQUIRE(mask.size() == cols,
              "MaskedSoftmax: mask length " + std::to_string(mask.size()) +
                  " does not match last axis of " + ShapeString(N(x).shape));
  std::vector<double> bias(cols);
  for (std::size_t j = 0; j < cols; ++j) {
    bias[j] = mask[j] != 0.0 ? 0.0 : -std::numeric_limits<double>::infinity();
  }
  return Softmax(Add(x, Tensor::FromData({cols}, std::move(bias))));
}

Tensor EmbeddingLookup(const Tensor& table, std::span<const int> ids) {
  const Shape& st = N(table).shape;
  RQA_REQUIRE(st.size() == 2, "EmbeddingLookup: table must be rank 2, got " +
                                  ShapeString(st));
  const std::size_t vocab = st[0], d = st[1];
  std::vector<double> out(ids.size() * d);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    RQA_REQUIRE(ids[i] >= 0 && static_cast<std::size_t>(ids[i]) < vocab,
                "EmbeddingLookup: id " + std::to_string(ids[i]) +
                    " out of range for table " + ShapeString(st));
    std::copy_n(N(table).value.data() + ids[i] * d, d, out.data() + i * d);
  }
  std::vector<int> id_copy(ids.begin(), ids.end());
  return OpBuilder::Make({ids.size(), d}, std::move(out), {table},
                         [id_copy = std::move(id_copy), d](Node& self) {
                           Node& t = *self.inputs[0];
                           for (std::size_t i = 0; i < id_copy.size(); ++i) {
                             double* dst = t.grad.data() + id_copy[i] * d;
                             const double* g = self.grad.data() + i * d;
                             for (std::size_t j = 0; j < d; ++j) dst[j] += g[j];
                           }
                         });
}

Tensor CrossEntropy(const Tensor& logits, std::span<const int> targets) {
  const Shape& s = N(logits).shape;
  RQA_REQUIRE(s.size() == 1 || s.size() == 2,
              "CrossEntropy: logits must be rank 1 or 2, got " + ShapeString(s));
  const std::size_t cols = s.back();
  const std::size_t rows = s.size() == 2 ? s[0] : 1;
  RQA_REQUIRE(targets.size() == rows,
              "CrossEntropy: " + std::to_string(targets.size()) +
                  " targets for logits " + ShapeString(s));
  const auto& v = N(logits).value;
  std::vector<double> out(rows);
  std::vector<double> probs(v.size());
  for (std::size_t i = 0; i < rows; ++i) {
    RQA_REQUIRE(targets[i] >= 0 && static_cast<std::size_t>(targets[i]) < cols,
                "CrossEntropy: target " + std::to_string(targets[i]) +
                    " out of range for " + ShapeString(s));
    const double* row = v.data() + i * cols;
    const double mx = RowMax(row, cols);
    double z = 0.0;
    for (std::size_t j = 0; j < cols; ++j) {
      probs[i * cols + j] = std::exp(row[j] - mx);
      z += probs[i * cols + j];
    }
    for (std::size_t j = 0; j < cols; ++j) probs[i * cols + j] /= z;
    out[i] = mx + std::log(z) - row[targets[i]];
  }
  Shape out_shape = s.size() == 2 ? Shape{rows} : Shape{};
  std::vector<int> t(targets.begin(), targets.end());
  return OpBuilder::Make(std::move(out_shape), std::move(out), {logits},
                         [probs = std::move(probs), t = std::move(t), rows,
                          cols](Node& self) {
                           Node& in = *self.inputs[0];
                           for (std::size_t i = 0; i < rows; ++i) {
                             const double g = self.grad[i];
                             for (std::size_t j = 0; j < cols; ++j) {
                               in.grad[i * cols + j] += g * probs[i * cols + j];
                             }
                             in.grad[i * cols + t[i]] -= g;
                           }
                         });
}

Tensor Pick(const Tensor& x, std::span<const int> ids) {
  const Shape& s = N(x).shape;
  RQA_REQUIRE(s.size() == 2 && s[0] == ids.size(),
              "Pick: expected [" + std::to_string(ids.size()) +
                  ", V] input, got " + ShapeString(s));
  const std::size_t cols = s[1];
  std::vector<double> out(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    RQA_REQUIRE(ids[i] >= 0 && static_cast<std::size_t>(ids[i]) < cols,
                "Pick: id out of range");
    out[i] = N(x).value[i * cols + ids[i]];
  }
  std::vector<int> id_copy(ids.begin(), ids.end());
  return OpBuilder::Make({ids.size()}, std::move(out), {x},
                         [id_copy = std::move(id_copy), cols](Node& self) {
                           Node& in = *self.inputs[0];
                           for (std::size_t i = 0; i < id_copy.size(); ++i) {
                             in.grad[i * cols + id_copy[i]] += self.grad[i];
                           }
                         });
}

Tensor Sum(const Tensor& x) {
  double total = 0.0;
  for (double v : N(x).value) total += v;
  return OpBuilder::Make({}, {total}, {x}, [](Node& self) {
    Node& in = *self.inputs[0];
    for (double& g : in.grad) g += self.grad[0];
  });
}

Tensor Sum(const Tensor& x, std::size_t axis) {
  const Shape& s = N(x).shape;
  RQA_REQUIRE(axis < s.size(), "Sum: axis " + std::to_string(axis) +
                                   " out of range for " + ShapeString(s));
  std::size_t outer = 1, inner = 1;
  for (std::size_t d = 0; d < axis; ++d) outer *= s[d];
  for (std::size_t d = axis + 1; d < s.size(); ++d) inner *= s[d];
  const std::size_t len = s[axis];
  Shape out_shape = s;
  out_shape.erase(out_shape.begin() + static_cast<std::ptrdiff_t>(axis));
  std::vector<double> out(outer * inner, 0.0);
  const auto& v = N(x).value;
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t l = 0; l < len; ++l) {
      const double* src = v.data() + (o * len + l) * inner;
      double* dst = out.data() + o * inner;
      for (std::size_t i = 0; i < inner; ++i) dst[i] += src[i];
    }
  }
  return OpBuilder::Make(std::move(out_shape), std::move(out), {x},
                         [outer, len, inner](Node& self) {
                           Node& in = *self.inputs[0];
                           for (std::size_t o = 0; o < outer; ++o) {
                             for (std::size_t l = 0; l < len; ++l) {
                               double* dst = in.grad.data() + (o * len + l) * inner;
                               const double* g = self.grad.data() + o * inner;
                               for (std::size_t i = 0; i < inner; ++i) dst[i] += g[i];
                             }
                           }
                         });
}

Tensor Mean(const Tensor& x) {
  return Scale(Sum(x), 1.0 / static_cast<double>(N(x).value.size()));
}

Tensor Mean(const Tensor& x, std::size_t axis) {
  const Shape& s = N(x).shape;
  RQA_REQUIRE(axis < s.size() && s[axis] > 0,
              "Mean: bad axis for " + ShapeString(s));
  return Scale(Sum(x, axis), 1.0 / static_cast<double>(s[axis]));
}

Tensor Concat(std::span<const Tensor> parts, std::size_t axis) {
  RQA_REQUIRE(!parts.empty(), "Concat: no inputs");
  const Shape& first = N(parts[0]).shape;
  RQA_REQUIRE(axis < first.size(), "Concat: axis " + std::to_string(axis) +
                                       " out of range for " + ShapeString(first));
  Shape out_shape = first;
  out_shape[axis] = 0;
  std::vector<std::size_t> widths;
  std::size_t outer = 1, inner = 1;
  for (std::size_t d = 0; d < axis; ++d) outer *= first[d];
  for (std::size_t d = axis + 1; d < first.size(); ++d) inner *= first[d];
  for (const Tensor& p : parts) {
    const Shape& s = N(p).shape;
    bool ok = s.size() == first.size();
    for (std::size_t d = 0; ok && d < s.size(); ++d) {
      if (d != axis && s[d] != first[d]) ok = false;
    }
    RQA_REQUIRE(ok, "Concat: shape " + ShapeString(s) +
                        " incompatible with " + ShapeString(first) +
                        " along axis " + std::to_string(axis));
    out_shape[axis] += s[axis];
    widths.push_back(s[axis] * inner);
  }
  const std::size_t row = out_shape[axis] * inner;
  std::vector<double> out(outer * row);
  std::size_t offset = 0;
  for (std::size_t p = 0; p < parts.size(); ++p) {
    const auto& v = N(parts[p]).value;
    for (std::size_t o = 0; o < outer; ++o) {
      std::copy_n(v.data() + o * widths[p], widths[p], out.data() + o * row + offset);
    }
    offset += widths[p];
  }
  std::vector<Tensor> inputs(parts.begin(), parts.end());
  return OpBuilder::Make(std::move(out_shape), std::move(out), inputs,
                         [widths = std::move(widths), outer, row](Node& self) {
                           std::size_t offset = 0;
                           for (std::size_t p = 0; p < widths.size(); ++p) {
                             Node& in = *self.inputs[p];
                             if (in.requires_grad) {
                               for (std::size_t o = 0; o < outer; ++o) {
                                 const double* g = self.grad.data() + o * row + offset;
                                 double* dst = in.grad.data() + o * widths[p];
                                 for (std::size_t i = 0; i < widths[p]; ++i) dst[i] += g[i];
                               }
                             }
                             offset += widths[p];
                           }
                         });
}

Tensor Concat(std::initializer_list<Tensor> parts, std::size_t axis) {
  return Concat(std::span<const Tensor>(parts.begin(), parts.size()), axis);
}

Tensor Concat(std::initializer_list<Tensor> parts) {
  RQA_REQUIRE(parts.size() > 0, "Concat: no inputs");
  const std::size_t rank = parts.begin()->rank();
  RQA_REQUIRE(rank > 0, "Concat: scalar inputs");
  return Concat(parts, rank - 1);
}

Tensor Reshape(const Tensor& x, Shape shape) {
  RQA_REQUIRE(NumElements(shape) == N(x).value.size(),
              "Reshape: cannot view " + ShapeString(N(x).shape) + " as " +
                  ShapeString(shape));
  return OpBuilder::Make(std::move(shape), N(x).value, {x}, [](Node& self) {
    Node& in = *self.inputs[0];
    for (std::size_t k = 0; k < self.grad.size(); ++k) in.grad[k] += self.grad[k];
  });
}

Tensor Transpose(const Tensor& x) {
  const Shape& s = N(x).shape;
  RQA_REQUIRE(s.size() == 2, "Transpose: rank-2 input required, got " +
                                 ShapeString(s));
  const std::size_t r = s[0], c = s[1];
  std::vector<double> out(r * c);
  MutMap(out.data(), c, r) = ConstMap(N(x).value.data(), r, c).transpose();
  return OpBuilder::Make({c, r}, std::move(out), {x}, [r, c](Node& self) {
    Node& in = *self.inputs[0];
    MutMap(in.grad.data(), r, c) += ConstMap(self.grad.data(), c, r).transpose();
  });
}

Tensor Slice(const Tensor& x, std::size_t begin, std::size_t length) {
  const Shape& s = N(x).shape;
  RQA_REQUIRE(!s.empty() && begin + length <= s.back() && length > 0,
              "Slice: [" + std::to_string(begin) + ", " +
                  std::to_string(begin + length) + ") out of range for " +
                  ShapeString(s));
  const std::size_t cols = s.back();
  const std::size_t rows = N(x).value.size() / cols;
  Shape out_shape = s;
  out_shape.back() = length;
  std::vector<double> out(rows * length);
  for (std::size_t i = 0; i < rows; ++i) {
    std::copy_n(N(x).value.data() + i * cols + begin, length,
                out.data() + i * length);
  }
  return OpBuilder::Make(std::move(out_shape), std::move(out), {x},
                         [rows, cols, begin, length](Node& self) {
                           Node& in = *self.inputs[0];
                           for (std::size_t i = 0; i < rows; ++i) {
                             for (std::size_t j = 0; j < length; ++j) {
                               in.grad[i * cols + begin + j] += self.grad[i * length + j];
                             }
                           }
                         });
}

Tensor Rows(const Tensor& x, std::span<const std::size_t> index) {
  const Shape& s = N(x).shape;
  RQA_REQUIRE(!s.empty(), "Rows: scalar input");
  const std::size_t width = N(x).value.size() / s[0];
  Shape out_shape = s;
  out_shape[0] = index.size();
  std::vector<double> out(index.size() * width);
  for (std::size_t i = 0; i < index.size(); ++i) {
    RQA_REQUIRE(index[i] < s[0], "Rows: index " + std::to_string(index[i]) +
                                     " out of range for " + ShapeString(s));
    std::copy_n(N(x).value.data() + index[i] * width, width,
                out.data() + i * width);
  }
  std::vector<std::size_t> idx(index.begin(), index.end());
  return OpBuilder::Make(std::move(out_shape), std::move(out), {x},
                         [idx = std::move(idx), width](Node& self) {
                           Node& in = *self.inputs[0];
                           for (std::size_t i = 0; i < idx.size(); ++i) {
                             double* dst = in.grad.data() + idx[i] * width;
                             const double* g = self.grad.data() + i * width;
                             for (std::size_t j = 0; j < width; ++j) dst[j] += g[j];
                           }
                         });
}

}  // namespace rqa
