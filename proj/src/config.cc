#include "rqa/config.h"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <utility>
#include <vector>

#include "rqa/error.h"

namespace rqa {

namespace {

std::string Trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::size_t ParseSize(const std::string& key, const std::string& v) {
  std::size_t out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) {
    throw FormatError("config: " + key + " expects a non-negative integer, got '" + v + "'");
  }
  return out;
}

std::uint64_t ParseU64(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) {
    throw FormatError("config: " + key + " expects an unsigned integer, got '" + v + "'");
  }
  return out;
}

double ParseDouble(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used == v.size()) return d;
  } catch (const std::exception&) {
  }
  throw FormatError("config: " + key + " expects a number, got '" + v + "'");
}

bool ParseBool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw FormatError("config: " + key + " expects true/false, got '" + v + "'");
}

// Shortest text that parses back to the same double.
std::string FormatDouble(double d) {
  char buf[512];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), d, std::chars_format::fixed);
  return std::string(buf, end);
}

struct Field {
  const char* key;
  std::function<std::string(const TrainConfig&)> get;
  std::function<void(TrainConfig&, const std::string&, const std::string&)> set;
};

#define RQA_SIZE_FIELD(k, member)                                                  \
  Field {                                                                          \
    k, [](const TrainConfig& c) { return std::to_string(c.member); },              \
        [](TrainConfig& c, const std::string& key, const std::string& v) {         \
          c.member = ParseSize(key, v);                                            \
        }                                                                          \
  }
#define RQA_DOUBLE_FIELD(k, member)                                                \
  Field {                                                                          \
    k, [](const TrainConfig& c) { return FormatDouble(c.member); },                \
        [](TrainConfig& c, const std::string& key, const std::string& v) {         \
          c.member = ParseDouble(key, v);                                          \
        }                                                                          \
  }

const std::vector<Field>& Fields() {
  static const std::vector<Field> fields = {
      RQA_DOUBLE_FIELD("learning_rate", learning_rate),
      RQA_DOUBLE_FIELD("clip", clip),
      RQA_SIZE_FIELD("batch_size", batch_size),
      RQA_SIZE_FIELD("epochs", epochs),
      RQA_SIZE_FIELD("patience", patience),
      RQA_SIZE_FIELD("max_steps", max_steps),
      RQA_DOUBLE_FIELD("lambda", lambda),
      RQA_DOUBLE_FIELD("pad_rating_prob", pad_rating_prob),
      Field{"seed", [](const TrainConfig& c) { return std::to_string(c.seed); },
            [](TrainConfig& c, const std::string& k, const std::string& v) {
              c.seed = ParseU64(k, v);
            }},
      RQA_SIZE_FIELD("hidden_dim", hidden_dim),
      RQA_SIZE_FIELD("embedding_dim", embedding_dim),
      RQA_SIZE_FIELD("attention_dim", attention_dim),
      RQA_SIZE_FIELD("layers", layers),
      Field{"variant",
            [](const TrainConfig& c) { return ModelVariantName(c.variant); },
            [](TrainConfig& c, const std::string&, const std::string& v) {
              c.variant = ParseModelVariant(v);
            }},
      RQA_SIZE_FIELD("beam", beam),
      RQA_SIZE_FIELD("max_decode_len", max_decode_len),
      RQA_SIZE_FIELD("max_reviews", limits.max_reviews),
      RQA_SIZE_FIELD("max_tokens", limits.max_tokens),
      RQA_SIZE_FIELD("max_snippet_tokens", limits.max_snippet_tokens),
      RQA_SIZE_FIELD("max_snippets", max_snippets),
      RQA_SIZE_FIELD("min_reviews", min_reviews),
      RQA_SIZE_FIELD("min_freq", min_freq),
      RQA_SIZE_FIELD("max_vocab", max_vocab),
      RQA_SIZE_FIELD("classifier_hidden", classifier_hidden),
      RQA_SIZE_FIELD("classifier_embedding", classifier_embedding),
      Field{"freeze_classifier",
            [](const TrainConfig& c) {
              return std::string(c.freeze_classifier ? "true" : "false");
            },
            [](TrainConfig& c, const std::string& k, const std::string& v) {
              c.freeze_classifier = ParseBool(k, v);
            }},
      RQA_SIZE_FIELD("classifier_epochs", classifier_epochs),
      RQA_DOUBLE_FIELD("classifier_lr", classifier_lr),
  };
  return fields;
}

#undef RQA_SIZE_FIELD
#undef RQA_DOUBLE_FIELD

}  // namespace

void TrainConfig::Validate() const {
  RQA_REQUIRE(learning_rate > 0.0, "learning_rate must be positive");
  RQA_REQUIRE(clip > 0.0, "clip must be positive");
  RQA_REQUIRE(batch_size >= 1, "batch_size must be >= 1");
  RQA_REQUIRE(lambda >= 0.0 && lambda <= 1.0, "lambda must be in [0, 1]");
  RQA_REQUIRE(pad_rating_prob >= 0.0 && pad_rating_prob <= 1.0,
              "pad_rating_prob must be in [0, 1]");
  RQA_REQUIRE(hidden_dim >= 1 && attention_dim >= 1, "model dims must be >= 1");
  RQA_REQUIRE(embedding_dim == hidden_dim, "embedding_dim must equal hidden_dim");
  RQA_REQUIRE(layers == 1, "only single-layer GRUs are supported");
  RQA_REQUIRE(beam >= 1, "beam must be >= 1");
  RQA_REQUIRE(max_decode_len >= 1, "max_decode_len must be >= 1");
  RQA_REQUIRE(limits.max_reviews >= 1 && limits.max_tokens >= 1,
              "example limits must be >= 1");
  RQA_REQUIRE(classifier_hidden >= 1 && classifier_embedding >= 1,
              "classifier dims must be >= 1");
}

ModelConfig TrainConfig::Model(std::size_t vocab_size) const {
  ModelConfig m;
  m.vocab_size = vocab_size;
  m.embedding_dim = embedding_dim;
  m.hidden_dim = hidden_dim;
  m.attention_dim = attention_dim;
  m.variant = variant;
  return m;
}

std::string TrainConfig::Serialize() const {
  std::string out;
  for (const Field& f : Fields()) out += std::string(f.key) + "=" + f.get(*this) + "\n";
  return out;
}

void TrainConfig::Set(const std::string& key, const std::string& value) {
  for (const Field& f : Fields()) {
    if (key == f.key) {
      f.set(*this, key, value);
      return;
    }
  }
  throw FormatError("config: unknown key '" + key + "'");
}

void TrainConfig::Apply(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = Trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw FormatError("config line " + std::to_string(lineno) + ": expected key=value");
    }
    Set(Trim(line.substr(0, eq)), Trim(line.substr(eq + 1)));
  }
}

TrainConfig TrainConfig::Parse(const std::string& text) {
  TrainConfig c;
  c.Apply(text);
  return c;
}

TrainConfig TrainConfig::Load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config file " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return Parse(buf.str());
}

}  // namespace rqa
