#ifndef RQA_TESTS_TEST_UTIL_H_
#define RQA_TESTS_TEST_UTIL_H_

#include <functional>
#include <string>
#include <vector>

#include "rqa/corpus.h"
#include "rqa/model.h"
#include "rqa/random.h"
#include "rqa/tensor.h"

namespace rqa::testing {

Tensor RandomTensor(const Shape& shape, Rng& rng, double scale = 1.0,
                    bool requires_grad = true);
Shape RandomShape(Rng& rng, std::size_t rank, std::size_t max_dim = 4);
std::vector<int> RandomIds(Rng& rng, std::size_t n, int vocab);

// Projects a tensor-valued function to a scalar with fixed random weights so
// every output component contributes to the gradient.
Tensor Project(const Tensor& out, std::uint64_t seed);

// Largest per-input relative error between the taped gradient of the scalar
// `f` and central differences with step `h`:
//   |analytic - numeric|_2 / max(|analytic|_2, |numeric|_2, floor)
double GradientError(const std::function<Tensor()>& f, const std::vector<Tensor>& inputs,
                     double h = 1e-5, double floor = 1e-6);

// Throwaway directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::string& path() const { return path_; }
  std::string File(const std::string& name) const { return path_ + "/" + name; }

 private:
  std::string path_;
};

std::string ReadFile(const std::string& path);
void WriteFile(const std::string& path, const std::string& text);

// One JSON review record as ingested by the corpus module.
std::string ReviewLine(const std::string& asin, double rating, const std::string& text);

// Vocabulary over the given words, in order.
Vocabulary MakeVocab(const std::vector<std::string>& words);

// A small model with random parameters over `vocab_size` ids.
AnswerModel SmallModel(std::size_t vocab_size, std::uint64_t seed, std::size_t dim = 6,
                       ModelVariant variant = ModelVariant::kFull);

// SmallModel with dim 4 and every parameter redrawn uniformly in
// [-scale, scale].
AnswerModel ScrambledModel(std::size_t vocab_size, std::uint64_t seed, double scale = 1.0,
                           ModelVariant variant = ModelVariant::kFull);

// Random model input: `reviews` reviews of 1..max_len ids in [4, vocab).
ModelInput RandomInput(Rng& rng, std::size_t vocab_size, std::size_t reviews,
                       std::size_t max_len, std::size_t snippet_tokens);

}  // namespace rqa::testing

#endif  // RQA_TESTS_TEST_UTIL_H_
