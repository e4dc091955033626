// Copyright 2026 The mythtag Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef MYTHTAG_EVALUATOR_H_
#define MYTHTAG_EVALUATOR_H_

// Scoring predicted annotations against gold.
//
// Pairs are formed greedily by descending span Jaccard (compared exactly as
// fractions), ties going to type-equal pairs, then the earlier gold start,
// then the earlier predicted start. Any positive overlap counts as
// recognition; type accuracy and exact-span rate are over matched pairs.

#include <algorithm>
#include <array>
#include <cstdint>
#include <cstdio>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "mythtag/schema.h"
#include "mythtag/standoff.h"

namespace mythtag {

class TextMismatchError : public std::invalid_argument {
 public:
  TextMismatchError(const std::string& pred, const std::string& gold)
      : std::invalid_argument("prediction text " + pred +
                              " differs from gold text " + gold) {}
};

struct MatchedPair {
  std::size_t pred = 0;
  std::size_t gold = 0;
  std::size_t intersection = 0;  // code points
  std::size_t union_size = 0;

  double jaccard() const {
    return static_cast<double>(intersection) / static_cast<double>(union_size);
  }
  bool operator==(const MatchedPair&) const = default;
};

struct MatchingResult {
  std::vector<MatchedPair> pairs;  // in selection order
  std::vector<std::size_t> unmatched_pred;
  std::vector<std::size_t> unmatched_gold;
};

inline MatchingResult MatchAnnotations(const std::vector<Annotation>& pred,
                                       const std::vector<Annotation>& gold) {
  struct Candidate {
    MatchedPair pair;
    bool type_equal;
  };
  std::vector<Candidate> cands;
  for (std::size_t p = 0; p < pred.size(); ++p) {
    for (std::size_t g = 0; g < gold.size(); ++g) {
      std::size_t lo = std::max(pred[p].start, gold[g].start);
      std::size_t hi = std::min(pred[p].end, gold[g].end);
      if (lo >= hi) continue;
      std::size_t uni = std::max(pred[p].end, gold[g].end) -
                        std::min(pred[p].start, gold[g].start);
      cands.push_back({{p, g, hi - lo, uni}, pred[p].type == gold[g].type});
    }
  }
  std::sort(cands.begin(), cands.end(),
            [&](const Candidate& x, const Candidate& y) {
              // x.i / x.u > y.i / y.u, exactly.
              uint64_t lhs = uint64_t{x.pair.intersection} * y.pair.union_size;
              uint64_t rhs = uint64_t{y.pair.intersection} * x.pair.union_size;
              if (lhs != rhs) return lhs > rhs;
              if (x.type_equal != y.type_equal) return x.type_equal;
              const auto& gx = gold[x.pair.gold];
              const auto& gy = gold[y.pair.gold];
              if (gx.start != gy.start) return gx.start < gy.start;
              if (gx.end != gy.end) return gx.end < gy.end;
              const auto& px = pred[x.pair.pred];
              const auto& py = pred[y.pair.pred];
              if (px.start != py.start) return px.start < py.start;
              return px.end < py.end;
            });
  MatchingResult r;
  std::vector<bool> pred_used(pred.size()), gold_used(gold.size());
  for (const auto& c : cands) {
    if (pred_used[c.pair.pred] || gold_used[c.pair.gold]) continue;
    pred_used[c.pair.pred] = gold_used[c.pair.gold] = true;
    r.pairs.push_back(c.pair);
  }
  for (std::size_t p = 0; p < pred.size(); ++p) {
    if (!pred_used[p]) r.unmatched_pred.push_back(p);
  }
  for (std::size_t g = 0; g < gold.size(); ++g) {
    if (!gold_used[g]) r.unmatched_gold.push_back(g);
  }
  return r;
}

struct Metrics {
  std::size_t gold_count = 0;
  std::size_t pred_count = 0;
  std::size_t matched = 0;
  std::size_t type_equal = 0;
  std::size_t exact_span = 0;
  double recognition_rate = 0.0;
  double type_accuracy = 0.0;
  double exact_span_rate = 0.0;
  bool empty_gold = false;  // recognition_rate then reads 1.0 by convention
  // confusion[gold type][predicted type] over matched pairs.
  std::array<std::array<std::size_t, kAllEntityTypes.size()>,
             kAllEntityTypes.size()>
      confusion{};
};

inline Metrics ComputeMetrics(const MatchingResult& matching,
                              const std::vector<Annotation>& pred,
                              const std::vector<Annotation>& gold) {
  Metrics m;
  m.gold_count = gold.size();
  m.pred_count = pred.size();
  m.matched = matching.pairs.size();
  for (const auto& p : matching.pairs) {
    const Annotation& a = pred[p.pred];
    const Annotation& g = gold[p.gold];
    if (a.type == g.type) ++m.type_equal;
    if (a.start == g.start && a.end == g.end) ++m.exact_span;
    ++m.confusion[Index(g.type)][Index(a.type)];
  }
  auto rate = [](std::size_t n, std::size_t d) {
    return d == 0 ? 0.0 : static_cast<double>(n) / static_cast<double>(d);
  };
  m.empty_gold = gold.empty();
  m.recognition_rate = m.empty_gold ? 1.0 : rate(m.matched, m.gold_count);
  m.type_accuracy = rate(m.type_equal, m.matched);
  m.exact_span_rate = rate(m.exact_span, m.matched);
  return m;
}

// Scores two stand-off files over the same text.
inline Metrics Evaluate(const StandoffFile& pred, const StandoffFile& gold) {
  if (pred.text_sha256 != gold.text_sha256) {
    throw TextMismatchError(pred.text_sha256, gold.text_sha256);
  }
  return ComputeMetrics(MatchAnnotations(pred.annotations, gold.annotations),
                        pred.annotations, gold.annotations);
}

inline std::string Fraction(std::size_t n, std::size_t d) {
  return std::to_string(n) + "/" + std::to_string(d);
}

inline Json ToJson(const Metrics& m) {
  Json confusion = Json::object();
  for (EntityType g : kAllEntityTypes) {
    Json row = Json::object();
    for (EntityType p : kAllEntityTypes) {
      row[std::string(ToString(p))] = m.confusion[Index(g)][Index(p)];
    }
    confusion[std::string(ToString(g))] = row;
  }
  Json warnings = Json::array();
  if (m.empty_gold) warnings.push_back("empty gold set: recognition is 1.0 by convention");
  return Json{
      {"counts",
       {{"gold", m.gold_count},
        {"predicted", m.pred_count},
        {"matched", m.matched},
        {"type_equal", m.type_equal},
        {"exact_span", m.exact_span}}},
      {"recognition_rate", m.recognition_rate},
      {"recognition", Fraction(m.empty_gold ? 0 : m.matched, m.gold_count)},
      {"type_accuracy", m.type_accuracy},
      {"type_accuracy_fraction", Fraction(m.type_equal, m.matched)},
      {"exact_span_rate", m.exact_span_rate},
      {"exact_span_fraction", Fraction(m.exact_span, m.matched)},
      {"confusion", confusion},
      {"warnings", warnings}};
}

enum class ReportFormat { kJson, kMarkdown };

inline std::string RenderReport(const Metrics& m, ReportFormat format) {
  if (format == ReportFormat::kJson) return DumpJson(ToJson(m));
  auto fixed3 = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", v);
    return std::string(buf);
  };
  std::string out = "# Evaluation\n\n";
  out += "- recognition: " + fixed3(m.recognition_rate) + " (" +
         Fraction(m.matched, m.gold_count) + ")\n";
  out += "- type accuracy: " + fixed3(m.type_accuracy) + " (" +
         Fraction(m.type_equal, m.matched) + ")\n";
  out += "- exact span: " + fixed3(m.exact_span_rate) + " (" +
         Fraction(m.exact_span, m.matched) + ")\n";
  out += "- gold: " + std::to_string(m.gold_count) +
         ", predicted: " + std::to_string(m.pred_count) +
         ", matched pairs: " + std::to_string(m.matched) + "\n";
  if (m.empty_gold) {
    out += "- warning: empty gold set, recognition is 1.0 by convention\n";
  }
  out += "\n## Type confusion (rows: gold, columns: predicted)\n\n";
  out += "| gold \\ predicted |";
  for (EntityType p : kAllEntityTypes) out += " " + std::string(ToString(p)) + " |";
  out += "\n|---|";
  for (std::size_t i = 0; i < kAllEntityTypes.size(); ++i) out += "---:|";
  out += "\n";
  for (EntityType g : kAllEntityTypes) {
    out += "| " + std::string(ToString(g)) + " |";
    for (EntityType p : kAllEntityTypes) {
      out += " " + std::to_string(m.confusion[Index(g)][Index(p)]) + " |";
    }
    out += "\n";
  }
  return out;
}

}  // namespace mythtag

#endif  // MYTHTAG_EVALUATOR_H_
