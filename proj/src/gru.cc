#include "rqa/gru.h"

#include "rqa/error.h"

namespace rqa {

GruParams GruParams::Create(std::size_t input_dim, std::size_t hidden_dim,
                            Rng& rng) {
  GruParams p;
  p.input_dim = input_dim;
  p.hidden_dim = hidden_dim;
  const Shape w{input_dim + hidden_dim, hidden_dim};
  p.w_update = UniformParam(w, kInitScale, rng);
  p.b_update = ZeroParam({hidden_dim});
  p.w_reset = UniformParam(w, kInitScale, rng);
  p.b_reset = ZeroParam({hidden_dim});
  p.w_candidate = UniformParam(w, kInitScale, rng);
  p.b_candidate = ZeroParam({hidden_dim});
  return p;
}

void GruParams::Register(ParamSet& set, const std::string& prefix) const {
  set.Add(prefix + ".w_update", w_update);
  set.Add(prefix + ".b_update", b_update);
  set.Add(prefix + ".w_reset", w_reset);
  set.Add(prefix + ".b_reset", b_reset);
  set.Add(prefix + ".w_candidate", w_candidate);
  set.Add(prefix + ".b_candidate", b_candidate);
}

Tensor GruCell(const Tensor& x, const Tensor& h, const GruParams& p) {
  RQA_REQUIRE(x.rank() >= 1 && x.shape().back() == p.input_dim,
              "GruCell: input " + ShapeString(x.shape()) + " but input_dim " +
                  std::to_string(p.input_dim));
  RQA_REQUIRE(h.rank() == x.rank() && h.shape().back() == p.hidden_dim,
              "GruCell: state " + ShapeString(h.shape()) + " but hidden_dim " +
                  std::to_string(p.hidden_dim) + " and input " +
                  ShapeString(x.shape()));
  const Tensor xh = Concat({x, h});
  const Tensor z = Sigmoid(Add(MatMul(xh, p.w_update), p.b_update));
  const Tensor r = Sigmoid(Add(MatMul(xh, p.w_reset), p.b_reset));
  const Tensor candidate =
      Tanh(Add(MatMul(Concat({x, Mul(r, h)}), p.w_candidate), p.b_candidate));
  // (1 - z) * h + z * h~  ==  h + z * (h~ - h)
  return Add(h, Mul(z, Add(candidate, Scale(h, -1.0))));
}

}  // namespace rqa
