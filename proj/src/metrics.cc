#include "rqa/metrics.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <optional>
#include <string_view>
#include <vector>

#include "rqa/error.h"

namespace rqa {

BleuStats& BleuStats::operator+=(const BleuStats& other) {
  for (int k = 0; k < 4; ++k) {
    matches[k] += other.matches[k];
    totals[k] += other.totals[k];
  }
  candidate_length += other.candidate_length;
  reference_length += other.reference_length;
  return *this;
}

namespace {

std::map<std::vector<std::string>, int> NgramCounts(std::span<const std::string> s,
                                                    std::size_t n) {
  std::map<std::vector<std::string>, int> counts;
  for (std::size_t i = 0; i + n <= s.size(); ++i) {
    ++counts[std::vector<std::string>(s.begin() + i, s.begin() + i + n)];
  }
  return counts;
}

// Rejects on length and first byte before a full compare.
bool SameToken(const std::string& x, const std::string& y) {
  if (x.size() != y.size()) return false;
  if (x.empty()) return true;
  return x[0] == y[0] && x.compare(y) == 0;
}

}  // namespace

BleuStats ComputeBleuStats(std::span<const std::string> candidate,
                           std::span<const std::string> reference) {
  BleuStats st;
  st.candidate_length = static_cast<double>(candidate.size());
  st.reference_length = static_cast<double>(reference.size());
  for (std::size_t n = 1; n <= 4; ++n) {
    const auto cand = NgramCounts(candidate, n);
    const auto ref = NgramCounts(reference, n);
    double matched = 0.0, total = 0.0;
    for (const auto& [gram, c] : cand) {
      total += c;
      const auto it = ref.find(gram);
      if (it != ref.end()) matched += std::min(c, it->second);
    }
    st.matches[n - 1] = matched;
    st.totals[n - 1] = total;
  }
  return st;
}

double BleuFromStats(const BleuStats& stats, int n) {
  RQA_REQUIRE(n >= 1 && n <= 4, "BLEU order must be in 1..4");
  if (stats.candidate_length == 0.0) return 0.0;
  double log_sum = 0.0;
  for (int k = 0; k < n; ++k) {
    const double m = stats.matches[k] > 0.0 ? stats.matches[k] : kBleuEpsilon;
    const double t = stats.totals[k] > 0.0 ? stats.totals[k] : 1.0;
    log_sum += std::log(m / t);
  }
  const double bp =
      std::min(1.0, std::exp(1.0 - stats.reference_length / stats.candidate_length));
  return 100.0 * bp * std::exp(log_sum / n);
}

double CorpusBleu(std::span<const Tokens> candidates, std::span<const Tokens> references,
                  int n) {
  RQA_REQUIRE(!candidates.empty(), "BLEU: empty candidate set");
  RQA_REQUIRE(candidates.size() == references.size(),
              "BLEU: one reference per candidate required");
  BleuStats total;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    total += ComputeBleuStats(candidates[i], references[i]);
  }
  return BleuFromStats(total, n);
}

std::size_t LcsLength(std::span<const std::string> a, std::span<const std::string> b) {
  // One rolling row; short references stay on the stack.
  constexpr std::size_t kInline = 64;
  std::array<std::size_t, kInline + 1> inline_row{};
  std::vector<std::size_t> heap_row;
  std::size_t* row = inline_row.data();
  if (b.size() > kInline) {
    heap_row.assign(b.size() + 1, 0);
    row = heap_row.data();
  }
  for (std::size_t i = 0; i < a.size(); ++i) {
    std::size_t diag = 0;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t up = row[j];
      row[j] = SameToken(a[i], b[j - 1]) ? diag + 1 : std::max(up, row[j - 1]);
      diag = up;
    }
  }
  return row[b.size()];
}

double RougeL(std::span<const std::string> candidate,
              std::span<const std::string> reference) {
  if (candidate.empty() || reference.empty()) return 0.0;
  const double lcs = static_cast<double>(LcsLength(candidate, reference));
  if (lcs == 0.0) return 0.0;
  const double p = lcs / static_cast<double>(candidate.size());
  const double r = lcs / static_cast<double>(reference.size());
  const double b2 = kRougeBeta * kRougeBeta;
  return 100.0 * (1.0 + b2) * p * r / (r + b2 * p);
}

std::string Stem(const std::string& word) {
  static const char* const kSuffixes[] = {"ations", "ation", "ingly", "ness", "ment",
                                          "ings",   "ing",   "edly",  "ies",  "ied",
                                          "ers",    "est",   "ly",    "ed",   "er",
                                          "es",     "s"};
  const auto ends = [&word](std::string_view s) {
    return word.size() >= s.size() && word.compare(word.size() - s.size(), s.size(), s) == 0;
  };
  for (const char* suf : kSuffixes) {
    const std::string_view s(suf);
    if (word.size() <= s.size() + 2 || !ends(s)) continue;
    const std::string stem = word.substr(0, word.size() - s.size());
    // Plurals: "es" only after sibilants (dresses, boxes), never "s" after "ss".
    if (s == "es" && !(stem.ends_with("ss") || stem.ends_with("x") ||
                       stem.ends_with("ch") || stem.ends_with("sh"))) {
      continue;
    }
    if (s == "s" && ends("ss")) continue;
    return stem;
  }
  return word;
}

namespace {

// Greedy unigram alignment for one matching stage. Each unaligned candidate
// position, left to right, takes an unaligned reference position with an
// equal key; the one continuing the previous alignment (ref + 1) is
// preferred, otherwise the leftmost.
void AlignStage(const std::vector<std::string>& cand_keys,
                const std::vector<std::string>& ref_keys,
                std::vector<std::optional<std::size_t>>& cand_to_ref,
                std::vector<bool>& ref_used) {
  for (std::size_t i = 0; i < cand_keys.size(); ++i) {
    if (cand_to_ref[i].has_value()) continue;
    std::optional<std::size_t> pick;
    if (i > 0 && cand_to_ref[i - 1].has_value()) {
      const std::size_t next = *cand_to_ref[i - 1] + 1;
      if (next < ref_keys.size() && !ref_used[next] && ref_keys[next] == cand_keys[i]) {
        pick = next;
      }
    }
    for (std::size_t j = 0; !pick && j < ref_keys.size(); ++j) {
      if (!ref_used[j] && ref_keys[j] == cand_keys[i]) pick = j;
    }
    if (pick) {
      cand_to_ref[i] = pick;
      ref_used[*pick] = true;
    }
  }
}

}  // namespace

MeteorStats MeteorAlign(std::span<const std::string> candidate,
                        std::span<const std::string> reference) {
  MeteorStats st;
  st.candidate_length = candidate.size();
  st.reference_length = reference.size();
  std::vector<std::optional<std::size_t>> cand_to_ref(candidate.size());
  std::vector<bool> ref_used(reference.size(), false);
  const std::vector<std::string> cand(candidate.begin(), candidate.end());
  const std::vector<std::string> ref(reference.begin(), reference.end());
  AlignStage(cand, ref, cand_to_ref, ref_used);
  std::vector<std::string> cand_stems, ref_stems;
  for (const auto& w : cand) cand_stems.push_back(Stem(w));
  for (const auto& w : ref) ref_stems.push_back(Stem(w));
  AlignStage(cand_stems, ref_stems, cand_to_ref, ref_used);

  // Chunks: maximal runs adjacent in both candidate and reference.
  bool in_run = false;
  std::size_t prev = 0;
  for (std::size_t i = 0; i < cand_to_ref.size(); ++i) {
    if (!cand_to_ref[i]) {
      in_run = false;
      continue;
    }
    ++st.matches;
    if (!in_run || *cand_to_ref[i] != prev + 1) ++st.chunks;
    in_run = true;
    prev = *cand_to_ref[i];
  }
  return st;
}

double MeteorFromStats(const MeteorStats& st) {
  if (st.matches == 0) return 0.0;
  const double m = static_cast<double>(st.matches);
  const double p = m / static_cast<double>(st.candidate_length);
  const double r = m / static_cast<double>(st.reference_length);
  const double fmean = 10.0 * p * r / (r + 9.0 * p);
  const double frag = static_cast<double>(st.chunks) / m;
  const double penalty = 0.5 * frag * frag * frag;
  return 100.0 * fmean * (1.0 - penalty);
}

double Meteor(std::span<const std::string> candidate,
              std::span<const std::string> reference) {
  if (candidate.empty() || reference.empty()) return 0.0;
  return MeteorFromStats(MeteorAlign(candidate, reference));
}

}  // namespace rqa
