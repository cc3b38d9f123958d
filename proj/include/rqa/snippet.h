#ifndef RQA_SNIPPET_H_
#define RQA_SNIPPET_H_

#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "rqa/corpus.h"

namespace rqa {

enum class PosTag { kNoun, kAdj, kVerb, kOther };

PosTag ParsePosTag(const std::string& text);  // NOUN, ADJ, VERB, OTHER
const char* PosTagName(PosTag tag);

// Coarse part-of-speech lexicon. Lookup: exact word, then the longest
// matching suffix rule, then OTHER.
class PosLexicon {
 public:
  void AddWord(std::string word, PosTag tag);
  void AddSuffix(std::string suffix, PosTag tag);

  PosTag Lookup(const std::string& token) const;
  std::size_t num_words() const { return words_.size(); }
  std::size_t num_suffixes() const { return suffixes_.size(); }

  // Reads `word<TAB>tag` and `suffix<TAB>tag` files. Later duplicates of a
  // word override earlier ones; '#' starts a comment line.
  static PosLexicon Load(const std::string& word_path,
                         const std::string& suffix_path);
  // words.tsv and suffixes.tsv inside `dir`.
  static PosLexicon LoadDir(const std::string& dir);
  // The lexicon shipped under data/lexicon.
  static PosLexicon Default();

 private:
  std::unordered_map<std::string, PosTag> words_;
  // Sorted by descending suffix length, then insertion order.
  std::vector<std::pair<std::string, PosTag>> suffixes_;
};

std::vector<PosTag> Tag(std::span<const std::string> tokens,
                        const PosLexicon& lexicon);

struct SnippetOptions {
  std::size_t max_snippets = 5;
  std::size_t max_snippet_tokens = 20;  // per snippet
};

// Maximal non-overlapping left-to-right matches of (ADJ|NOUN)* NOUN, with
// repeated token sequences dropped after their first occurrence, capped at
// max_snippets. A match longer than max_snippet_tokens keeps its trailing
// tokens so that it still ends on the head noun.
std::vector<TokenSeq> ExtractSnippets(std::span<const std::string> tokens,
                                      const PosLexicon& lexicon,
                                      const SnippetOptions& options = {});

// Adapter for BuildExamples.
SnippetFn MakeSnippetFn(PosLexicon lexicon, SnippetOptions options = {});

}  // namespace rqa

#endif  // RQA_SNIPPET_H_
