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

#ifndef SANIPIPE_INDICATORS_H_
#define SANIPIPE_INDICATORS_H_

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "sanipipe/corpus.h"
#include "sanipipe/eval.h"
#include "sanipipe/scorer.h"
#include "sanipipe/websearch.h"

// Per-span privacy risk signals. Each indicator looks at a detected span and
// votes on whether leaving it in the clear risks re-identification; a span is
// masked when at least k of the configured indicators vote risky.

namespace sanipipe {

class IndicatorError : public std::runtime_error {
 public:
  explicit IndicatorError(const std::string &msg) : std::runtime_error(msg) {}
};

enum class IndicatorId { PROB, SPANCLS, PERTURB, SEQLAB, WEBSEARCH };

inline constexpr int kNumIndicators = 5;

const char *ToString(IndicatorId id);
std::optional<IndicatorId> ParseIndicatorId(const std::string &name);

// One indicator's verdict on one span.
struct RiskDecision {
  std::string doc_id;
  size_t start = 0;
  size_t end = 0;
  IndicatorId indicator = IndicatorId::PROB;
  bool risky = false;
  double score = 0;  // indicator-specific magnitude behind the verdict

  bool operator==(const RiskDecision &other) const = default;
};

// JSONL round trip for decisions:
//   {"doc_id": ..., "start": ..., "end": ..., "indicator": "PROB",
//    "risky": true, "score": 0.83}
void SaveRiskDecisions(const std::vector<RiskDecision> &decisions,
                       const std::string &path);
std::vector<RiskDecision> LoadRiskDecisions(const std::string &path);

// ---------------------------------------------------------------------------
// Feature extraction
// ---------------------------------------------------------------------------

struct Aggregates {
  double min = 0, max = 0, mean = 0, median = 0, sum = 0;
};

// min/max/mean/median/sum of a non-empty list. Median of an even count is the
// mean of the two middle values. min <= median <= max and min <= mean <= max
// always hold. Throws IndicatorError on an empty list.
Aggregates AggregateLogProbs(const std::vector<double> &logprobs);

// Span representation fed to the classifier indicators: log probability
// aggregates, length counts, the span's type, and (for the span classifier)
// hashed text features.
struct FeatureVector {
  double p_min = 0, p_max = 0, p_avg = 0, p_mdn = 0, p_sum = 0;
  double nb_words = 0;     // tokens in the span
  double nb_subwords = 0;  // scorer-level units (tokens again for the n-gram)
  SemanticType pii_type = SemanticType::MISC;
  std::vector<float> text_features;  // empty unless hashed text is enabled
};

inline constexpr size_t kNumericFeatures = 7;
inline constexpr size_t kTextFeatureDim = 1024;

// Builds the feature vector for one span of a tokenized document.
// [token_begin, token_end) must be non-empty. with_text adds the hashed
// bag-of-words block.
FeatureVector ExtractSpanFeatures(const Scorer &scorer,
                                  const std::vector<std::string> &tokens,
                                  size_t token_begin, size_t token_end,
                                  SemanticType type, bool with_text);

// Hashed bag of words over the span surface: tokens containing a letter or
// digit, lowercased, 64-bit FNV-1a modulo dim, L2-normalized. All zeros for a
// surface with no such tokens.
std::vector<float> SpanTextFeatures(std::string_view surface,
                                    size_t dim = kTextFeatureDim);

// Dense layout used by the trainer and the model: 7 numeric features, then a
// one-hot type block, then the optional text block.
std::vector<double> FeatureRow(const FeatureVector &features, bool with_text);

// ---------------------------------------------------------------------------
// Logistic regression
// ---------------------------------------------------------------------------

// Binary logistic regression trained with full-batch gradient descent from a
// zero initialization. Only the numeric block is standardized (zero mean,
// unit variance; constant features keep scale 1); one-hot and text blocks
// pass through. L2 applies to weights, never the bias.
struct LogRegModel {
  std::vector<double> weights;
  double bias = 0;
  std::vector<double> feature_mean;  // numeric block only
  std::vector<double> feature_std;
  bool with_text = false;
  int iterations = 0;
  double learning_rate = 0;
  double l2 = 0;
  double final_loss = 0;
  bool single_class = false;  // training data had only one label

  // P(risky | features).
  double PredictProbability(const FeatureVector &features) const;

  void Save(const std::string &path) const;
  static LogRegModel Load(const std::string &path);
};

struct TrainOptions {
  int iterations = 500;
  double learning_rate = 0.5;
  double l2 = 1e-4;
  bool with_text = false;
};

LogRegModel TrainLogReg(const std::vector<FeatureVector> &rows,
                        const std::vector<bool> &labels,
                        const TrainOptions &options);

// Training internals, exposed so the gradient can be verified numerically.
// X rows are already standardized; loss is mean log loss plus (l2/2)*||w||^2.
double LogRegLoss(const std::vector<std::vector<double>> &x,
                  const std::vector<int> &y, const std::vector<double> &w,
                  double bias, double l2);
void LogRegGradient(const std::vector<std::vector<double>> &x,
                    const std::vector<int> &y, const std::vector<double> &w,
                    double bias, double l2, std::vector<double> *grad_w,
                    double *grad_bias);

// ---------------------------------------------------------------------------
// Classifier indicators
// ---------------------------------------------------------------------------

// Probability-based vote: risky iff the model probability strictly exceeds
// the threshold.
RiskDecision ProbIndicator(const LogRegModel &model, const std::string &doc_id,
                           size_t start, size_t end,
                           const FeatureVector &features,
                           double threshold = 0.5);

// Same decision rule over the text-augmented model.
RiskDecision SpanClsIndicator(const LogRegModel &model,
                              const std::string &doc_id, size_t start,
                              size_t end, const FeatureVector &features,
                              double threshold = 0.5);

// ---------------------------------------------------------------------------
// Perturbation indicator
// ---------------------------------------------------------------------------

// Detected spans of one document plus their entity cluster assignment.
// spans are code point ranges; cluster_of[i] indexes cluster_ids.
struct DocSpans {
  std::vector<std::pair<size_t, size_t>> spans;
  std::vector<int> cluster_of;
  std::vector<std::string> cluster_ids;
};

// How much masking one cluster changed the log probability of one target
// span: delta = base score - perturbed score, in mean log probability per
// token. Positive delta means the cluster made the target more predictable.
struct InfluenceRecord {
  size_t target_index = 0;
  int perturbed_cluster = 0;
  double delta = 0;
};

// Influence of every other cluster on the given target span. The base score
// keeps the document intact; each perturbation replaces every token of every
// span in one cluster with the mask placeholder, positions preserved.
std::vector<InfluenceRecord> PerturbInfluence(const Document &doc,
                                              const DocSpans &spans,
                                              const Scorer &scorer,
                                              size_t target_index);

// All influence records of a document (every target, every other cluster).
std::vector<InfluenceRecord> AllInfluences(const Document &doc,
                                           const DocSpans &spans,
                                           const Scorer &scorer);

// Indices of risky spans at threshold t: a span is risky when its cluster
// raised some other cluster's target by more than t. Whole clusters flip
// together. Raising t never adds spans.
std::set<size_t> PerturbRiskySpans(const std::vector<InfluenceRecord> &records,
                                   const DocSpans &spans, double threshold);

// Convenience wrapper computing influences and applying the threshold.
std::set<size_t> PerturbIndicator(const Document &doc, const DocSpans &spans,
                                  const Scorer &scorer, double threshold);

struct SweepPoint {
  double threshold = 0;
  double precision = 0;
  double recall_direct = 0;
  double recall_quasi = 0;
  double objective = 0;
};

struct TuneResult {
  double threshold = 0;
  double objective = 0;
  bool degenerate = false;  // no influence records: threshold is +infinity
  std::vector<SweepPoint> sweep;
};

// Grid search for the perturbation threshold on annotated documents. The
// candidate grid is the set of observed influence deltas plus +infinity; each
// candidate is scored by token precision + direct entity recall + quasi
// entity recall of the masking it induces, and the smallest candidate
// attaining the maximum wins.
TuneResult TunePerturbThreshold(const Corpus &corpus,
                                const std::map<std::string, DocSpans> &spans,
                                const Scorer &scorer);

// Sweep rows as CSV: threshold,precision,recall_direct,recall_quasi,objective.
std::string SweepToCsv(const std::vector<SweepPoint> &sweep);

// ---------------------------------------------------------------------------
// Sequence labeling indicator
// ---------------------------------------------------------------------------

enum class TokenLabel { MASK, NO_MASK };
enum class MatchMode { STRICT, PARTIAL };

// Maps an external token-level masking prediction onto spans. STRICT flags a
// span when every overlapped token is MASK, PARTIAL when at least one is.
// Spans overlapping no token are never flagged. labels must line up with
// the document's tokens; a length mismatch raises IndicatorError naming
// doc_id.
std::set<size_t> SeqLabRiskySpans(const std::vector<TokenLabel> &labels,
                                  const std::vector<Token> &tokens,
                                  const std::vector<std::pair<size_t, size_t>> &spans,
                                  MatchMode mode, const std::string &doc_id);

// Token predictions per document, JSONL:
//   {"doc_id": ..., "labels": ["MASK", "NO_MASK", ...]}
std::map<std::string, std::vector<TokenLabel>> LoadTokenPredictions(
    const std::string &path);
void SaveTokenPredictions(
    const std::map<std::string, std::vector<TokenLabel>> &predictions,
    const std::string &path);

// ---------------------------------------------------------------------------
// Web search indicators
// ---------------------------------------------------------------------------

// Risky iff the span's result URLs intersect the person's result URLs (both
// already normalized). score is the intersection size.
RiskDecision WebUrlIndicator(const std::string &doc_id, size_t start,
                             size_t end, const std::set<std::string> &span_urls,
                             const std::set<std::string> &person_urls);

// Risky iff lower <= total_hits (and total_hits <= upper when an upper bound
// is configured). The lower bound is inclusive; there is no upper bound by
// default. score is total_hits.
RiskDecision WebHitsIndicator(const std::string &doc_id, size_t start,
                              size_t end, uint64_t total_hits,
                              uint64_t lower = 100,
                              std::optional<uint64_t> upper = std::nullopt);

// ---------------------------------------------------------------------------
// Combination
// ---------------------------------------------------------------------------

struct CombineResult {
  // Spans with at least k risky votes, as (doc_id, start, end).
  std::set<std::tuple<std::string, size_t, size_t>> risky;
  // Set when k exceeds the number of distinct indicators present in the
  // input, which makes the result trivially empty.
  bool k_exceeds_indicators = false;
};

// k-of-n vote over per-span decisions. Each indicator may vote at most once
// per span (duplicates raise IndicatorError); k must lie in [1, 5].
CombineResult CombineDecisions(const std::vector<RiskDecision> &decisions,
                               int k);

}  // namespace sanipipe

#endif  // SANIPIPE_INDICATORS_H_
