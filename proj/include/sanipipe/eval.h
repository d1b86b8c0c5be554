// Copyright 2026 The Sanipipe Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS-IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or
// implied. See the License for the specific language governing
// permissions and limitations under the License.

#ifndef SANIPIPE_EVAL_H_
#define SANIPIPE_EVAL_H_

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "sanipipe/corpus.h"
#include "sanipipe/scorer.h"

// Privacy-oriented evaluation of masking output against multi-annotator
// references. All token metrics are micro-averages pooled over (document,
// annotator) pairs: a document with two annotation sets contributes its
// system tokens twice, once against each reference.

namespace sanipipe {

class EvalError : public std::runtime_error {
 public:
  explicit EvalError(const std::string &msg) : std::runtime_error(msg) {}
};

// The spans one system chose to mask in one document. Masks are code point
// ranges, kept sorted and non-overlapping.
struct MaskSet {
  std::string doc_id;
  std::vector<std::pair<size_t, size_t>> masks;

  bool operator==(const MaskSet &other) const = default;
};

// Reads mask sets, one JSON object per line:
//   {"doc_id": "...", "masks": [[3, 9], [14, 20]]}
// Masks are sorted on load; overlaps, inverted ranges and duplicate doc ids
// raise EvalError with the line number.
std::map<std::string, MaskSet> LoadMaskSets(const std::string &path);
void SaveMaskSets(const std::map<std::string, MaskSet> &masks,
                  const std::string &path);

struct TokenPrf {
  double precision = 0;
  double recall = 0;
  double f1 = 0;
  uint64_t tp = 0;
  uint64_t fp = 0;
  uint64_t fn = 0;
  // True when the corresponding denominator was empty and the value fell
  // back to the 1.0 convention.
  bool precision_degenerate = false;
  bool recall_degenerate = false;
};

struct MetricsReport {
  std::string config;
  double precision = 0;
  double weighted_precision = 0;
  double recall_all = 0;
  double f1 = 0;
  double recall_entity = 0;
  double recall_direct = 0;
  double recall_quasi = 0;
  // Backing counts.
  uint64_t tp = 0, fp = 0, fn = 0;
  double weighted_tp = 0, weighted_sys = 0;
  uint64_t entities = 0, entities_protected = 0;
  uint64_t direct = 0, direct_protected = 0;
  uint64_t quasi = 0, quasi_protected = 0;
  bool precision_degenerate = false;
  bool weighted_precision_degenerate = false;
  bool recall_degenerate = false;
  bool entity_degenerate = false;
  bool direct_degenerate = false;
  bool quasi_degenerate = false;
  std::string scorer_name;
};

// Core evaluation entry point. masks must contain exactly one entry per
// corpus document: missing documents and unknown doc ids raise EvalError
// listing them, as do out-of-range masks. scorer may be null, which leaves
// weighted precision at plain precision and marks it degenerate-free only
// when defined.
class Evaluator {
 public:
  Evaluator(const Corpus *corpus, const Scorer *scorer);

  MetricsReport Evaluate(const std::map<std::string, MaskSet> &masks,
                         const std::string &config) const;

  // Token precision/recall/F1 only (no scorer needed).
  TokenPrf TokenScores(const std::map<std::string, MaskSet> &masks) const;

 private:
  const Corpus *corpus_;
  const Scorer *scorer_;
};

// Fraction of entity clusters of the given kind whose every mention is fully
// covered by the masks, pooled over (document, annotator) pairs. kind_filter
// NO_MASK means "all maskworthy clusters" (DIRECT or QUASI).
double EntityRecall(const Corpus &corpus,
                    const std::map<std::string, MaskSet> &masks,
                    IdentifierKind kind_filter, uint64_t *total = nullptr,
                    uint64_t *covered = nullptr);

// Renders reports as CSV with the fixed column set
// config,P,Pw,R_all,F1,R_ent,R_direct,R_quasi (4 decimal places).
std::string ReportsToCsv(const std::vector<MetricsReport> &reports);

// Full report with counts and degeneracy flags, one JSON object per report.
std::string ReportsToJson(const std::vector<MetricsReport> &reports);

// ---------------------------------------------------------------------------
// Recognizer-style scoring of typed spans (used for detector diagnostics).
// ---------------------------------------------------------------------------

struct TypedSpan {
  size_t start = 0;
  size_t end = 0;
  SemanticType type = SemanticType::MISC;
};

struct PrfRow {
  uint64_t tp = 0, fp = 0, fn = 0;
  double precision = 0, recall = 0, f1 = 0;
};

struct TypedTokenScores {
  std::map<SemanticType, PrfRow> per_type;
  PrfRow micro_labeled;    // label must match
  PrfRow micro_unlabeled;  // any PII label counts
  // (gold type, predicted type) clashes on tokens carrying both, sorted by
  // descending count.
  std::vector<std::pair<std::pair<SemanticType, SemanticType>, uint64_t>>
      confusion;
};

// Accumulates token-level agreement between gold and predicted typed spans
// over any number of (document, annotator) views. Spans within one view must
// be non-overlapping.
class TypedTokenAccumulator {
 public:
  void AddView(const std::vector<Token> &tokens,
               const std::vector<TypedSpan> &gold,
               const std::vector<TypedSpan> &predicted);
  TypedTokenScores Finalize() const;

 private:
  struct Cell {
    uint64_t tp = 0, fp = 0, fn = 0;
  };
  std::map<SemanticType, Cell> cells_;
  uint64_t binary_tp_ = 0, binary_fp_ = 0, binary_fn_ = 0;
  std::map<std::pair<SemanticType, SemanticType>, uint64_t> confusion_;
};

}  // namespace sanipipe

#endif  // SANIPIPE_EVAL_H_
