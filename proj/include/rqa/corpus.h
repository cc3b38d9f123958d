#ifndef RQA_CORPUS_H_
#define RQA_CORPUS_H_

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace rqa {

using TokenSeq = std::vector<std::string>;

inline constexpr std::string_view kTokenizerVersion = "rqa-tok-1";

// A star rating 1..5, or the PAD symbol meaning "no rating preference".
// PAD is never produced by ingestion; it only enters through user queries
// and training-time augmentation.
class RatingSymbol {
 public:
  static constexpr int kNumSymbols = 6;
  static constexpr int kPadIndex = 5;

  static RatingSymbol Stars(int stars);
  static RatingSymbol Pad() { return RatingSymbol(kPadIndex); }
  // "1".."5" or "PAD".
  static RatingSymbol Parse(std::string_view text);

  bool is_pad() const { return index_ == kPadIndex; }
  int stars() const;
  // Row in the rating embedding table: stars-1, or 5 for PAD.
  int index() const { return index_; }
  std::string ToString() const;

  friend bool operator==(RatingSymbol a, RatingSymbol b) {
    return a.index_ == b.index_;
  }

 private:
  explicit RatingSymbol(int index) : index_(index) {}
  int index_;
};

struct Review {
  std::string item_id;
  TokenSeq tokens;
  int rating = 0;  // 1..5
};

struct ItemBundle {
  std::string item_id;
  std::vector<Review> reviews;
};

struct TrainingExample {
  std::string item_id;
  std::vector<Review> context;
  Review target;
  std::vector<TokenSeq> snippets;
  RatingSymbol rating = RatingSymbol::Pad();
};

// Lowercases ASCII, splits on whitespace, and emits every ASCII punctuation
// character as its own token. Bytes >= 0x80 are treated as word characters.
TokenSeq Tokenize(std::string_view text);

// Joins tokens with spaces, attaching closing punctuation to the previous
// token.
std::string Detokenize(std::span<const std::string> tokens);

struct IngestResult {
  std::vector<ItemBundle> bundles;
  std::size_t records = 0;
  std::size_t skipped_malformed = 0;    // unparseable or missing a field
  std::size_t skipped_bad_rating = 0;   // rating outside 1..5
  std::size_t dropped_empty = 0;        // no tokens after preprocessing
  std::size_t warnings() const { return skipped_malformed + skipped_bad_rating; }
};

// Reads line-delimited JSON records with `reviewText`, `overall`, `asin`.
// Items keep file order of first appearance; reviews keep file order.
// Throws IoError when the file cannot be read.
IngestResult Ingest(const std::string& path, std::size_t min_reviews);
IngestResult IngestLines(std::span<const std::string> lines,
                         std::size_t min_reviews);

class Vocabulary {
 public:
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;
  static constexpr int kBos = 2;
  static constexpr int kEos = 3;
  static constexpr int kNumSpecials = 4;

  Vocabulary();
  // Specials followed by `tokens` in id order.
  static Vocabulary FromTokens(std::span<const std::string> tokens);

  int Id(const std::string& token) const;  // kUnk when absent
  const std::string& Token(int id) const;
  std::vector<int> Encode(std::span<const std::string> tokens) const;
  // Drops PAD, BOS and EOS; UNK is kept as "<unk>".
  TokenSeq Decode(std::span<const int> ids) const;
  std::size_t size() const { return id_to_token_.size(); }
  bool Contains(const std::string& token) const;

  // FNV-1a over the ordered token list; identifies the vocabulary in shard
  // headers and checkpoints.
  std::uint64_t Hash() const;
  std::string HashHex() const;

  void Save(const std::string& path) const;
  static Vocabulary Load(const std::string& path);

 private:
  std::vector<std::string> id_to_token_;
  std::unordered_map<std::string, int> token_to_id_;
};

// Tokens with frequency >= min_freq, most frequent first, ties broken
// lexicographically; at most max_size entries including the four specials.
Vocabulary BuildVocab(std::span<const ItemBundle> bundles, std::size_t min_freq,
                      std::size_t max_size);

struct ExampleLimits {
  std::size_t max_reviews = 20;
  std::size_t max_tokens = 20;
  std::size_t max_snippet_tokens = 20;
};

using SnippetFn = std::function<std::vector<TokenSeq>(std::span<const std::string>)>;

// Keeps the first `max_tokens` tokens.
TokenSeq Truncate(std::span<const std::string> tokens, std::size_t max_tokens);

// Leading snippets whose total length fits in `budget` tokens; stops at the
// first one that does not fit.
std::vector<TokenSeq> FitSnippetBudget(std::vector<TokenSeq> snippets,
                                       std::size_t budget);

// Leave-one-out examples: one per review, the rest as context. Contexts with
// more than max_reviews candidates are subsampled uniformly without
// replacement using a generator seeded from (seed, item_id); the chosen
// reviews keep bundle order.
std::vector<TrainingExample> BuildExamples(const ItemBundle& bundle,
                                           const SnippetFn& extractor,
                                           const ExampleLimits& limits,
                                           std::uint64_t seed);

// Picks up to `max_reviews` of `reviews` uniformly without replacement,
// returned in their original order.
std::vector<std::size_t> SubsampleIndices(std::size_t count,
                                          std::size_t max_reviews,
                                          std::uint64_t seed);

struct DatasetSplit {
  std::vector<ItemBundle> train, valid, test;
};

// Item-level 90/5/5 split after a seeded shuffle. Valid and test each get at
// least one item when there are three or more items.
DatasetSplit SplitByItem(std::vector<ItemBundle> bundles, std::uint64_t seed);

}  // namespace rqa

#endif  // RQA_CORPUS_H_
