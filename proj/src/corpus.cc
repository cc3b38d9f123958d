#include "rqa/corpus.h"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

#include <json.hpp>

#include "rqa/error.h"
#include "rqa/random.h"

namespace rqa {

RatingSymbol RatingSymbol::Stars(int stars) {
  RQA_REQUIRE(stars >= 1 && stars <= 5,
              "rating must be in 1..5, got " + std::to_string(stars));
  return RatingSymbol(stars - 1);
}

RatingSymbol RatingSymbol::Parse(std::string_view text) {
  if (text == "PAD" || text == "pad") return Pad();
  RQA_REQUIRE(text.size() == 1 && text[0] >= '1' && text[0] <= '5',
              "rating must be 1..5 or PAD, got '" + std::string(text) + "'");
  return Stars(text[0] - '0');
}

int RatingSymbol::stars() const {
  RQA_REQUIRE(!is_pad(), "PAD rating has no star value");
  return index_ + 1;
}

std::string RatingSymbol::ToString() const {
  return is_pad() ? "PAD" : std::to_string(index_ + 1);
}

TokenSeq Tokenize(std::string_view text) {
  TokenSeq out;
  std::string current;
  auto flush = [&] {
    if (!current.empty()) out.push_back(std::move(current));
    current.clear();
  };
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (c < 0x80 && std::isspace(c)) {
      flush();
    } else if (c < 0x80 && std::ispunct(c)) {
      flush();
      out.emplace_back(1, ch);
    } else {
      current.push_back(c < 0x80 ? static_cast<char>(std::tolower(c)) : ch);
    }
  }
  flush();
  return out;
}

std::string Detokenize(std::span<const std::string> tokens) {
  std::string out;
  for (const std::string& t : tokens) {
    const bool attach = t.size() == 1 && std::string_view(".,!?;:)'%").find(t[0]) !=
                                             std::string_view::npos;
    if (!out.empty() && !attach && out.back() != '(') out.push_back(' ');
    out += t;
  }
  return out;
}

// ---- ingestion ---------------------------------------------------------------

IngestResult IngestLines(std::span<const std::string> lines,
                         std::size_t min_reviews) {
  RQA_REQUIRE(min_reviews >= 1, "min_reviews must be >= 1");
  IngestResult result;
  std::vector<ItemBundle> order;
  std::unordered_map<std::string, std::size_t> index;
  for (const std::string& line : lines) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    ++result.records;
    nlohmann::json record = nlohmann::json::parse(line, nullptr, false);
    if (record.is_discarded() || !record.is_object()) {
      ++result.skipped_malformed;
      continue;
    }
    auto text = record.find("reviewText");
    auto overall = record.find("overall");
    auto asin = record.find("asin");
    if (text == record.end() || !text->is_string() || overall == record.end() ||
        !overall->is_number() || asin == record.end() || !asin->is_string()) {
      ++result.skipped_malformed;
      continue;
    }
    const double stars = overall->get<double>();
    if (!(stars >= 1.0 && stars <= 5.0) || std::floor(stars) != stars) {
      ++result.skipped_bad_rating;
      continue;
    }
    Review review;
    review.item_id = asin->get<std::string>();
    review.tokens = Tokenize(text->get<std::string>());
    review.rating = static_cast<int>(stars);
    if (review.tokens.empty()) {
      ++result.dropped_empty;
      continue;
    }
    auto [it, inserted] = index.try_emplace(review.item_id, order.size());
    if (inserted) order.push_back(ItemBundle{review.item_id, {}});
    order[it->second].reviews.push_back(std::move(review));
  }
  for (ItemBundle& b : order) {
    if (b.reviews.size() >= min_reviews) result.bundles.push_back(std::move(b));
  }
  return result;
}

IngestResult Ingest(const std::string& path, std::size_t min_reviews) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open review file: " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(std::move(line));
  if (in.bad()) throw IoError("error while reading: " + path);
  return IngestLines(lines, min_reviews);
}

// ---- vocabulary ----------------------------------------------------------------

Vocabulary::Vocabulary() {
  for (const char* s : {"<pad>", "<unk>", "<s>", "</s>"}) {
    token_to_id_[s] = static_cast<int>(id_to_token_.size());
    id_to_token_.emplace_back(s);
  }
}

Vocabulary Vocabulary::FromTokens(std::span<const std::string> tokens) {
  Vocabulary v;
  for (const std::string& t : tokens) {
    auto [it, inserted] =
        v.token_to_id_.try_emplace(t, static_cast<int>(v.id_to_token_.size()));
    if (!inserted) throw FormatError("duplicate vocabulary entry: " + t);
    v.id_to_token_.push_back(t);
  }
  return v;
}

int Vocabulary::Id(const std::string& token) const {
  auto it = token_to_id_.find(token);
  return it == token_to_id_.end() ? kUnk : it->second;
}

bool Vocabulary::Contains(const std::string& token) const {
  return token_to_id_.count(token) > 0;
}

const std::string& Vocabulary::Token(int id) const {
  RQA_REQUIRE(id >= 0 && static_cast<std::size_t>(id) < id_to_token_.size(),
              "token id out of range: " + std::to_string(id));
  return id_to_token_[id];
}

std::vector<int> Vocabulary::Encode(std::span<const std::string> tokens) const {
  std::vector<int> ids;
  ids.reserve(tokens.size());
  for (const std::string& t : tokens) ids.push_back(Id(t));
  return ids;
}

TokenSeq Vocabulary::Decode(std::span<const int> ids) const {
  TokenSeq out;
  for (int id : ids) {
    if (id >= kNumSpecials || id == kUnk) out.push_back(Token(id));
  }
  return out;
}

std::uint64_t Vocabulary::Hash() const {
  std::uint64_t h = HashString(kTokenizerVersion);
  for (const std::string& t : id_to_token_) {
    h = HashString(t, h);
    h = HashString(std::string_view("\n"), h);
  }
  return h;
}

std::string Vocabulary::HashHex() const {
  std::ostringstream out;
  out << std::hex << std::setw(16) << std::setfill('0') << Hash();
  return out.str();
}

void Vocabulary::Save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write vocabulary: " + path);
  for (std::size_t i = kNumSpecials; i < id_to_token_.size(); ++i) {
    out << id_to_token_[i] << '\n';
  }
  if (!out) throw IoError("error while writing: " + path);
}

Vocabulary Vocabulary::Load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open vocabulary: " + path);
  std::vector<std::string> tokens;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) tokens.push_back(line);
  }
  return FromTokens(tokens);
}

Vocabulary BuildVocab(std::span<const ItemBundle> bundles, std::size_t min_freq,
                      std::size_t max_size) {
  RQA_REQUIRE(min_freq >= 1, "min_freq must be >= 1");
  RQA_REQUIRE(max_size >= static_cast<std::size_t>(Vocabulary::kNumSpecials),
              "max_size must be >= 4 (the special tokens)");
  std::unordered_map<std::string, std::size_t> counts;
  for (const ItemBundle& b : bundles) {
    for (const Review& r : b.reviews) {
      for (const std::string& t : r.tokens) ++counts[t];
    }
  }
  std::vector<std::pair<std::string, std::size_t>> ranked;
  for (auto& [token, n] : counts) {
    if (n >= min_freq) ranked.emplace_back(token, n);
  }
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  const std::size_t room = max_size - Vocabulary::kNumSpecials;
  if (ranked.size() > room) ranked.resize(room);
  std::vector<std::string> tokens;
  tokens.reserve(ranked.size());
  for (auto& [token, n] : ranked) tokens.push_back(token);
  return Vocabulary::FromTokens(tokens);
}

// ---- examples ------------------------------------------------------------------

TokenSeq Truncate(std::span<const std::string> tokens, std::size_t max_tokens) {
  const std::size_t n = std::min(tokens.size(), max_tokens);
  return TokenSeq(tokens.begin(), tokens.begin() + static_cast<std::ptrdiff_t>(n));
}

std::vector<std::size_t> SubsampleIndices(std::size_t count,
                                          std::size_t max_reviews,
                                          std::uint64_t seed) {
  std::vector<std::size_t> idx(count);
  for (std::size_t i = 0; i < count; ++i) idx[i] = i;
  if (count <= max_reviews) return idx;
  Rng rng(seed);
  // Partial Fisher-Yates: the first max_reviews slots are a uniform sample.
  for (std::size_t i = 0; i < max_reviews; ++i) {
    const std::size_t j = i + rng.Below(count - i);
    std::swap(idx[i], idx[j]);
  }
  idx.resize(max_reviews);
  std::sort(idx.begin(), idx.end());
  return idx;
}

namespace {

Review TruncatedReview(const Review& r, std::size_t max_tokens) {
  return Review{r.item_id, Truncate(r.tokens, max_tokens), r.rating};
}

}  // namespace

std::vector<TokenSeq> FitSnippetBudget(std::vector<TokenSeq> snippets,
                                       std::size_t budget) {
  std::vector<TokenSeq> out;
  for (TokenSeq& s : snippets) {
    if (s.empty() || s.size() > budget) break;
    budget -= s.size();
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<TrainingExample> BuildExamples(const ItemBundle& bundle,
                                           const SnippetFn& extractor,
                                           const ExampleLimits& limits,
                                           std::uint64_t seed) {
  RQA_REQUIRE(bundle.reviews.size() >= 2,
              "BuildExamples: item " + bundle.item_id + " has fewer than 2 reviews");
  const std::uint64_t item_seed = DeriveSeed(seed, HashString(bundle.item_id));
  const std::size_t n = bundle.reviews.size();
  std::vector<TrainingExample> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    TrainingExample ex;
    ex.item_id = bundle.item_id;
    ex.target = TruncatedReview(bundle.reviews[i], limits.max_tokens);
    ex.rating = RatingSymbol::Stars(ex.target.rating);
    for (std::size_t k : SubsampleIndices(n - 1, limits.max_reviews,
                                          DeriveSeed(item_seed, i))) {
      const std::size_t j = k < i ? k : k + 1;
      ex.context.push_back(TruncatedReview(bundle.reviews[j], limits.max_tokens));
    }
    ex.snippets = FitSnippetBudget(extractor(ex.target.tokens), limits.max_snippet_tokens);
    out.push_back(std::move(ex));
  }
  return out;
}

DatasetSplit SplitByItem(std::vector<ItemBundle> bundles, std::uint64_t seed) {
  Rng rng(DeriveSeed(seed, HashString("split")));
  Shuffle(bundles, rng);
  const std::size_t n = bundles.size();
  std::size_t held = 0;
  if (n >= 3) {
    held = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(n * 0.05)));
  }
  DatasetSplit split;
  for (std::size_t i = 0; i < n; ++i) {
    auto& dst = i < held ? split.test : i < 2 * held ? split.valid : split.train;
    dst.push_back(std::move(bundles[i]));
  }
  return split;
}

}  // namespace rqa
