#ifndef RQA_CHECKPOINT_H_
#define RQA_CHECKPOINT_H_

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "rqa/adam.h"
#include "rqa/params.h"

namespace rqa {

// Binary container; layout in docs/checkpoint_format.md. Tensor payloads are
// float32, so values are rounded on save.
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct StoredTensor {
  std::string name;
  Shape shape;
  std::vector<float> values;
};

struct Checkpoint {
  std::string config;      // TrainConfig::Serialize() echo
  std::string vocab_hash;  // hex
  std::uint64_t step = 0;
  std::map<std::string, std::string> metadata;
  std::vector<StoredTensor> tensors;

  const StoredTensor* Find(const std::string& name) const;
  void Put(const std::string& name, const Shape& shape, std::span<const double> values);
};

void WriteCheckpoint(const std::string& path, const Checkpoint& ckpt);
// Throws IoError when unreadable, FormatError when malformed.
Checkpoint ReadCheckpoint(const std::string& path);

// Copies every parameter into `ckpt` under its own name.
void StoreParams(Checkpoint& ckpt, const ParamSet& params);
// Overwrites every parameter from `ckpt`; a missing name or a shape mismatch
// throws FormatError.
void RestoreParams(const Checkpoint& ckpt, const ParamSet& params);

// Optimizer moments as `adam.m.<name>` / `adam.v.<name>`, the per-tensor step
// counts in metadata `adam.step.<name>`.
void StoreMoments(Checkpoint& ckpt, const ParamSet& params,
                  const std::vector<AdamMoments>& moments);
void RestoreMoments(const Checkpoint& ckpt, const ParamSet& params,
                    std::vector<AdamMoments>& moments);

}  // namespace rqa

#endif  // RQA_CHECKPOINT_H_
