#include "rqa/shard.h"

#include <fstream>

#include <json.hpp>

#include "rqa/error.h"

namespace rqa {

using nlohmann::json;

namespace {

json ReviewToJson(const Review& r) {
  return json{{"item", r.item_id}, {"rating", r.rating}, {"tokens", r.tokens}};
}

Review ReviewFromJson(const json& j) {
  Review r;
  r.item_id = j.at("item").get<std::string>();
  r.rating = j.at("rating").get<int>();
  r.tokens = j.at("tokens").get<TokenSeq>();
  if (r.rating < 1 || r.rating > 5) throw FormatError("review rating out of range");
  return r;
}

json ExampleToJson(const TrainingExample& ex) {
  json context = json::array();
  for (const Review& r : ex.context) context.push_back(ReviewToJson(r));
  return json{{"item", ex.item_id},
              {"target", ReviewToJson(ex.target)},
              {"context", std::move(context)},
              {"snippets", ex.snippets},
              {"rating", ex.rating.ToString()}};
}

TrainingExample ExampleFromJson(const json& j) {
  TrainingExample ex;
  ex.item_id = j.at("item").get<std::string>();
  ex.target = ReviewFromJson(j.at("target"));
  for (const json& r : j.at("context")) ex.context.push_back(ReviewFromJson(r));
  ex.snippets = j.at("snippets").get<std::vector<TokenSeq>>();
  ex.rating = RatingSymbol::Parse(j.at("rating").get<std::string>());
  return ex;
}

std::ofstream OpenOut(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write: " + path);
  return out;
}

}  // namespace

void WriteShard(const std::string& path, ShardHeader header,
                const std::vector<TrainingExample>& examples) {
  header.count = examples.size();
  std::ofstream out = OpenOut(path);
  json h{{"format", "rqa-shard"},
         {"version", header.version},
         {"tokenizer", header.tokenizer},
         {"vocab_hash", header.vocab_hash},
         {"seed", header.seed},
         {"max_reviews", header.limits.max_reviews},
         {"max_tokens", header.limits.max_tokens},
         {"max_snippet_tokens", header.limits.max_snippet_tokens},
         {"count", header.count}};
  out << h.dump() << '\n';
  for (const TrainingExample& ex : examples) out << ExampleToJson(ex).dump() << '\n';
  if (!out) throw IoError("error while writing: " + path);
}

Shard ReadShard(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open shard: " + path);
  std::string line;
  if (!std::getline(in, line)) throw FormatError("empty shard: " + path);
  Shard shard;
  try {
    json h = json::parse(line);
    if (h.at("format") != "rqa-shard") throw FormatError("not a shard: " + path);
    shard.header.version = h.at("version").get<int>();
    if (shard.header.version != kShardVersion) {
      throw FormatError("unsupported shard version " +
                        std::to_string(shard.header.version) + " in " + path);
    }
    shard.header.tokenizer = h.at("tokenizer").get<std::string>();
    shard.header.vocab_hash = h.at("vocab_hash").get<std::string>();
    shard.header.seed = h.at("seed").get<std::uint64_t>();
    shard.header.limits.max_reviews = h.at("max_reviews").get<std::size_t>();
    shard.header.limits.max_tokens = h.at("max_tokens").get<std::size_t>();
    shard.header.limits.max_snippet_tokens = h.at("max_snippet_tokens").get<std::size_t>();
    shard.header.count = h.at("count").get<std::size_t>();
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      shard.examples.push_back(ExampleFromJson(json::parse(line)));
    }
  } catch (const json::exception& e) {
    throw FormatError("malformed shard " + path + ": " + e.what());
  } catch (const ContractViolation& e) {
    throw FormatError("malformed shard " + path + ": " + e.what());
  }
  if (shard.examples.size() != shard.header.count) {
    throw FormatError("shard " + path + " declares " +
                      std::to_string(shard.header.count) + " records, found " +
                      std::to_string(shard.examples.size()));
  }
  return shard;
}

void WriteItems(const std::string& path, const std::vector<ItemBundle>& bundles) {
  std::ofstream out = OpenOut(path);
  for (const ItemBundle& b : bundles) {
    json reviews = json::array();
    for (const Review& r : b.reviews) {
      reviews.push_back(json{{"rating", r.rating}, {"tokens", r.tokens}});
    }
    out << json{{"item", b.item_id}, {"reviews", std::move(reviews)}}.dump() << '\n';
  }
  if (!out) throw IoError("error while writing: " + path);
}

std::vector<ItemBundle> ReadItems(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open item index: " + path);
  std::vector<ItemBundle> out;
  std::string line;
  try {
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      json j = json::parse(line);
      ItemBundle b;
      b.item_id = j.at("item").get<std::string>();
      for (const json& r : j.at("reviews")) {
        b.reviews.push_back(Review{b.item_id, r.at("tokens").get<TokenSeq>(),
                                   r.at("rating").get<int>()});
      }
      out.push_back(std::move(b));
    }
  } catch (const json::exception& e) {
    throw FormatError("malformed item index " + path + ": " + e.what());
  }
  return out;
}

}  // namespace rqa
