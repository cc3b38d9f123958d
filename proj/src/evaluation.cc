#include "rqa/evaluation.h"

#include <algorithm>
#include <cstdio>
#include <iomanip>
#include <sstream>

#include <json.hpp>

#include "rqa/error.h"

namespace rqa {

namespace {

std::size_t OrderKey(const std::string& name) {
  for (std::size_t i = 0; i < kSystemOrder.size(); ++i) {
    if (name == kSystemOrder[i]) return i;
  }
  return kSystemOrder.size();
}

}  // namespace

std::array<double, 6> AggregateScores(std::span<const ExampleScore> examples) {
  std::array<double, 6> out{};
  if (examples.empty()) return out;
  BleuStats bleu;
  double meteor = 0.0, rouge = 0.0;
  for (const ExampleScore& e : examples) {
    bleu += e.bleu;
    meteor += e.meteor_score;
    rouge += e.rouge_l;
  }
  for (int n = 1; n <= 4; ++n) out[n - 1] = BleuFromStats(bleu, n);
  out[4] = meteor / static_cast<double>(examples.size());
  out[5] = rouge / static_cast<double>(examples.size());
  return out;
}

const SystemReport* EvalReport::Find(const std::string& name) const {
  for (const SystemReport& s : systems) {
    if (s.name == name) return &s;
  }
  return nullptr;
}

std::string EvalReport::Table() const {
  std::size_t width = 6;
  for (const SystemReport& s : systems) width = std::max(width, s.name.size());
  std::ostringstream os;
  os << std::left << std::setw(static_cast<int>(width)) << "System";
  for (const char* m : kMetricNames) os << "  " << std::right << std::setw(8) << m;
  os << "  " << std::setw(8) << "failed" << "\n";
  for (const SystemReport& s : systems) {
    os << std::left << std::setw(static_cast<int>(width)) << s.name << std::right;
    for (double v : s.scores) os << "  " << std::setw(8) << std::fixed << std::setprecision(3) << v;
    os << "  " << std::setw(8) << s.failures << "\n";
  }
  return os.str();
}

std::string EvalReport::JsonLines() const {
  std::string out;
  for (const SystemReport& s : systems) {
    for (std::size_t m = 0; m < kMetricNames.size(); ++m) {
      nlohmann::json j;
      j["system"] = s.name;
      j["metric"] = kMetricNames[m];
      j["score"] = s.scores[m];
      j["examples"] = s.examples.size();
      j["failures"] = s.failures;
      out += j.dump() + "\n";
    }
  }
  return out;
}

EvalReport EvaluateSystems(std::span<const TrainingExample> test,
                           std::span<const NamedSystem> systems) {
  RQA_REQUIRE(!test.empty(), "evaluate: empty test set");
  EvalReport report;
  for (const NamedSystem& sys : systems) {
    SystemReport rep;
    rep.name = sys.name;
    for (std::size_t i = 0; i < test.size(); ++i) {
      const TokenSeq& ref = test[i].target.tokens;
      ExampleScore score;
      TokenSeq cand;
      try {
        TrainingExample blind = test[i];
        blind.target.tokens.clear();
        cand = sys.fn(blind, i);
      } catch (const std::exception& e) {
        score.failed = true;
        ++rep.failures;
        if (rep.failure_messages.size() < 5) {
          rep.failure_messages.push_back("example " + std::to_string(i) + ": " + e.what());
        }
      }
      if (score.failed) {
        score.bleu.reference_length = static_cast<double>(ref.size());
      } else {
        score.bleu = ComputeBleuStats(cand, ref);
        score.meteor = MeteorAlign(cand, ref);
        score.meteor_score = Meteor(cand, ref);
        score.rouge_l = RougeL(cand, ref);
      }
      rep.examples.push_back(std::move(score));
    }
    rep.scores = AggregateScores(rep.examples);
    report.systems.push_back(std::move(rep));
  }
  std::stable_sort(report.systems.begin(), report.systems.end(),
                   [](const SystemReport& a, const SystemReport& b) {
                     return OrderKey(a.name) < OrderKey(b.name);
                   });
  return report;
}

}  // namespace rqa
