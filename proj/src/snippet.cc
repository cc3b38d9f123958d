#include "rqa/snippet.h"

#include <algorithm>
#include <fstream>
#include <set>

#include "rqa/error.h"

namespace rqa {

PosTag ParsePosTag(const std::string& text) {
  if (text == "NOUN") return PosTag::kNoun;
  if (text == "ADJ") return PosTag::kAdj;
  if (text == "VERB") return PosTag::kVerb;
  if (text == "OTHER") return PosTag::kOther;
  throw FormatError("unknown POS tag: " + text);
}

const char* PosTagName(PosTag tag) {
  switch (tag) {
    case PosTag::kNoun: return "NOUN";
    case PosTag::kAdj: return "ADJ";
    case PosTag::kVerb: return "VERB";
    case PosTag::kOther: return "OTHER";
  }
  return "OTHER";
}

void PosLexicon::AddWord(std::string word, PosTag tag) {
  words_[std::move(word)] = tag;
}

void PosLexicon::AddSuffix(std::string suffix, PosTag tag) {
  RQA_REQUIRE(!suffix.empty(), "empty suffix rule");
  auto pos = std::find_if(suffixes_.begin(), suffixes_.end(), [&](const auto& e) {
    return e.first.size() < suffix.size();
  });
  suffixes_.insert(pos, {std::move(suffix), tag});
}

PosTag PosLexicon::Lookup(const std::string& token) const {
  if (auto it = words_.find(token); it != words_.end()) return it->second;
  for (const auto& [suffix, tag] : suffixes_) {
    if (token.size() > suffix.size() &&
        token.compare(token.size() - suffix.size(), suffix.size(), suffix) == 0) {
      return tag;
    }
  }
  return PosTag::kOther;
}

namespace {

template <typename Fn>
void ReadTsv(const std::string& path, Fn&& fn) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open lexicon file: " + path);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) {
      throw FormatError(path + ":" + std::to_string(line_no) + ": expected key<TAB>tag");
    }
    fn(line.substr(0, tab), ParsePosTag(line.substr(tab + 1)));
  }
}

}  // namespace

PosLexicon PosLexicon::Load(const std::string& word_path,
                            const std::string& suffix_path) {
  PosLexicon lex;
  ReadTsv(word_path, [&](std::string w, PosTag t) { lex.AddWord(std::move(w), t); });
  ReadTsv(suffix_path,
          [&](std::string s, PosTag t) { lex.AddSuffix(std::move(s), t); });
  return lex;
}

PosLexicon PosLexicon::LoadDir(const std::string& dir) {
  return Load(dir + "/words.tsv", dir + "/suffixes.tsv");
}

PosLexicon PosLexicon::Default() {
  return LoadDir(std::string(RQA_DATA_DIR) + "/lexicon");
}

std::vector<PosTag> Tag(std::span<const std::string> tokens,
                        const PosLexicon& lexicon) {
  std::vector<PosTag> tags;
  tags.reserve(tokens.size());
  for (const std::string& t : tokens) tags.push_back(lexicon.Lookup(t));
  return tags;
}

std::vector<TokenSeq> ExtractSnippets(std::span<const std::string> tokens,
                                      const PosLexicon& lexicon,
                                      const SnippetOptions& options) {
  RQA_REQUIRE(options.max_snippets >= 1, "max_snippets must be >= 1");
  RQA_REQUIRE(options.max_snippet_tokens >= 1, "max_snippet_tokens must be >= 1");
  const std::vector<PosTag> tags = Tag(tokens, lexicon);
  auto chunkable = [](PosTag t) { return t == PosTag::kNoun || t == PosTag::kAdj; };
  std::vector<TokenSeq> out;
  std::set<TokenSeq> seen;
  std::size_t i = 0;
  while (i < tokens.size() && out.size() < options.max_snippets) {
    if (!chunkable(tags[i])) {
      ++i;
      continue;
    }
    std::size_t end = i;
    while (end < tokens.size() && chunkable(tags[end])) ++end;
    // The longest match from i ends at the last noun of the run.
    std::size_t last_noun = end;
    for (std::size_t k = end; k-- > i;) {
      if (tags[k] == PosTag::kNoun) {
        last_noun = k;
        break;
      }
    }
    if (last_noun == end) {
      i = end;
      continue;
    }
    const std::size_t stop = last_noun + 1;
    const std::size_t start = std::max(i, stop > options.max_snippet_tokens
                                              ? stop - options.max_snippet_tokens
                                              : std::size_t{0});
    TokenSeq snippet(tokens.begin() + static_cast<std::ptrdiff_t>(start),
                     tokens.begin() + static_cast<std::ptrdiff_t>(stop));
    if (seen.insert(snippet).second) out.push_back(std::move(snippet));
    i = stop;
  }
  return out;
}

SnippetFn MakeSnippetFn(PosLexicon lexicon, SnippetOptions options) {
  return [lexicon = std::move(lexicon), options](std::span<const std::string> tokens) {
    return ExtractSnippets(tokens, lexicon, options);
  };
}

}  // namespace rqa
