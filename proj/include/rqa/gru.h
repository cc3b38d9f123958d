#ifndef RQA_GRU_H_
#define RQA_GRU_H_

#include <string>

#include "rqa/params.h"
#include "rqa/tensor.h"

namespace rqa {

// Gate weights act on the concatenation [x; h] (or [x; r*h] for the
// candidate), so each weight matrix is [input_dim + hidden_dim, hidden_dim].
struct GruParams {
  std::size_t input_dim = 0;
  std::size_t hidden_dim = 0;
  Tensor w_update, b_update;
  Tensor w_reset, b_reset;
  Tensor w_candidate, b_candidate;

  static GruParams Create(std::size_t input_dim, std::size_t hidden_dim,
                          Rng& rng);
  void Register(ParamSet& set, const std::string& prefix) const;
};

// One GRU step:
//   z  = sigmoid([x; h] W_z + b_z)
//   r  = sigmoid([x; h] W_r + b_r)
//   h~ = tanh([x; r*h] W_h + b_h)
//   h' = (1 - z) * h + z * h~
// x is [input_dim] or [n, input_dim]; h matches with hidden_dim.
Tensor GruCell(const Tensor& x, const Tensor& h, const GruParams& params);

}  // namespace rqa

#endif  // RQA_GRU_H_
