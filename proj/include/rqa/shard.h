#ifndef RQA_SHARD_H_
#define RQA_SHARD_H_

#include <cstdint>
#include <string>
#include <vector>

#include "rqa/corpus.h"

namespace rqa {

// Shard files are line-delimited JSON. Line 1 is the header; every further
// line is one TrainingExample. Keys are written in sorted order, so equal
// inputs give byte-identical files.
inline constexpr int kShardVersion = 1;

struct ShardHeader {
  int version = kShardVersion;
  std::string tokenizer{kTokenizerVersion};
  std::string vocab_hash;
  std::uint64_t seed = 0;
  ExampleLimits limits;
  std::size_t count = 0;
};

struct Shard {
  ShardHeader header;
  std::vector<TrainingExample> examples;
};

void WriteShard(const std::string& path, ShardHeader header,
                const std::vector<TrainingExample>& examples);
// Throws FormatError on a bad header, version, or record.
Shard ReadShard(const std::string& path);

// Tokenized item index used by `generate` and the retrieval baselines.
void WriteItems(const std::string& path, const std::vector<ItemBundle>& bundles);
std::vector<ItemBundle> ReadItems(const std::string& path);

}  // namespace rqa

#endif  // RQA_SHARD_H_
