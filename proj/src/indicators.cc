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

#include "sanipipe/indicators.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "json.hpp"

#include "sanipipe/io.h"
#include "sanipipe/text.h"

namespace sanipipe {

using nlohmann::json;

namespace {

const char *kIndicatorNames[] = {"PROB", "SPANCLS", "PERTURB", "SEQLAB",
                                 "WEBSEARCH"};

double Sigmoid(double z) {
  if (z >= 0) {
    return 1.0 / (1.0 + std::exp(-z));
  }
  double e = std::exp(z);
  return e / (1.0 + e);
}

}  // namespace

const char *ToString(IndicatorId id) {
  return kIndicatorNames[static_cast<int>(id)];
}

std::optional<IndicatorId> ParseIndicatorId(const std::string &name) {
  for (int i = 0; i < kNumIndicators; ++i) {
    if (name == kIndicatorNames[i]) return static_cast<IndicatorId>(i);
  }
  return std::nullopt;
}

void SaveRiskDecisions(const std::vector<RiskDecision> &decisions,
                       const std::string &path) {
  std::ostringstream out;
  for (const RiskDecision &d : decisions) {
    json obj = json::object();
    obj["doc_id"] = d.doc_id;
    obj["start"] = d.start;
    obj["end"] = d.end;
    obj["indicator"] = ToString(d.indicator);
    obj["risky"] = d.risky;
    obj["score"] = d.score;
    out << obj.dump() << "\n";
  }
  WriteFile(path, out.str());
}

std::vector<RiskDecision> LoadRiskDecisions(const std::string &path) {
  LineReader reader(path);
  std::vector<RiskDecision> decisions;
  std::string line;
  while (reader.ReadLine(&line)) {
    if (line.empty()) continue;
    const std::string where = path + ":" + std::to_string(reader.line_number());
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::parse_error &e) {
      throw IndicatorError(where + ": invalid JSON: " + e.what());
    }
    if (!obj.is_object() || !obj.contains("doc_id") ||
        !obj["doc_id"].is_string() || !obj.contains("start") ||
        !obj["start"].is_number_integer() || !obj.contains("end") ||
        !obj["end"].is_number_integer() || !obj.contains("indicator") ||
        !obj["indicator"].is_string() || !obj.contains("risky") ||
        !obj["risky"].is_boolean() || !obj.contains("score") ||
        !obj["score"].is_number()) {
      throw IndicatorError(where + ": malformed risk decision");
    }
    RiskDecision d;
    d.doc_id = obj["doc_id"].get<std::string>();
    int64_t start = obj["start"].get<int64_t>();
    int64_t end = obj["end"].get<int64_t>();
    if (start < 0 || end <= start) {
      throw IndicatorError(where + ": empty or inverted span");
    }
    d.start = static_cast<size_t>(start);
    d.end = static_cast<size_t>(end);
    auto id = ParseIndicatorId(obj["indicator"].get<std::string>());
    if (!id) {
      throw IndicatorError(where + ": unknown indicator \"" +
                           obj["indicator"].get<std::string>() + "\"");
    }
    d.indicator = *id;
    d.risky = obj["risky"].get<bool>();
    d.score = obj["score"].get<double>();
    decisions.push_back(std::move(d));
  }
  return decisions;
}

// ---------------------------------------------------------------------------
// Feature extraction
// ---------------------------------------------------------------------------

Aggregates AggregateLogProbs(const std::vector<double> &logprobs) {
  if (logprobs.empty()) {
    throw IndicatorError("cannot aggregate an empty log probability list");
  }
  std::vector<double> sorted = logprobs;
  std::sort(sorted.begin(), sorted.end());
  Aggregates out;
  out.min = sorted.front();
  out.max = sorted.back();
  double sum = 0;
  for (double v : sorted) sum += v;
  out.sum = sum;
  out.mean = sum / static_cast<double>(sorted.size());
  size_t n = sorted.size();
  out.median = n % 2 == 1 ? sorted[n / 2]
                          : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
  return out;
}

std::vector<float> SpanTextFeatures(std::string_view surface, size_t dim) {
  std::vector<float> features(dim, 0.0f);
  bool any = false;
  for (const Token &token : Tokenize(surface)) {
    bool has_alnum = false;
    for (char32_t c : DecodeUTF8(token.surface)) {
      if (IsWordChar(c)) {
        has_alnum = true;
        break;
      }
    }
    if (!has_alnum) continue;
    std::string lowered = LowerCopy(token.surface);
    features[Fnv1a64(lowered) % dim] += 1.0f;
    any = true;
  }
  if (!any) return features;
  double norm = 0;
  for (float v : features) norm += static_cast<double>(v) * v;
  norm = std::sqrt(norm);
  for (float &v : features) v = static_cast<float>(v / norm);
  return features;
}

FeatureVector ExtractSpanFeatures(const Scorer &scorer,
                                  const std::vector<std::string> &tokens,
                                  size_t token_begin, size_t token_end,
                                  SemanticType type, bool with_text) {
  if (token_begin >= token_end || token_end > tokens.size()) {
    throw IndicatorError("span token range is empty or out of bounds");
  }
  std::vector<double> logprobs =
      scorer.SpanLogProbs(tokens, token_begin, token_end);
  Aggregates agg = AggregateLogProbs(logprobs);
  FeatureVector features;
  features.p_min = agg.min;
  features.p_max = agg.max;
  features.p_avg = agg.mean;
  features.p_mdn = agg.median;
  features.p_sum = agg.sum;
  features.nb_words = static_cast<double>(token_end - token_begin);
  features.nb_subwords = static_cast<double>(logprobs.size());
  features.pii_type = type;
  if (with_text) {
    std::string surface;
    for (size_t t = token_begin; t < token_end; ++t) {
      if (!surface.empty()) surface += ' ';
      surface += tokens[t];
    }
    features.text_features = SpanTextFeatures(surface);
  }
  return features;
}

std::vector<double> FeatureRow(const FeatureVector &features, bool with_text) {
  std::vector<double> row;
  row.reserve(kNumericFeatures + kNumSemanticTypes +
              (with_text ? kTextFeatureDim : 0));
  row.push_back(features.p_min);
  row.push_back(features.p_max);
  row.push_back(features.p_avg);
  row.push_back(features.p_mdn);
  row.push_back(features.p_sum);
  row.push_back(features.nb_words);
  row.push_back(features.nb_subwords);
  for (int i = 0; i < kNumSemanticTypes; ++i) {
    row.push_back(static_cast<int>(features.pii_type) == i ? 1.0 : 0.0);
  }
  if (with_text) {
    if (features.text_features.empty()) {
      row.insert(row.end(), kTextFeatureDim, 0.0);
    } else {
      if (features.text_features.size() != kTextFeatureDim) {
        throw IndicatorError("text feature block has wrong dimension");
      }
      for (float v : features.text_features) row.push_back(v);
    }
  }
  return row;
}

// ---------------------------------------------------------------------------
// Logistic regression
// ---------------------------------------------------------------------------

double LogRegLoss(const std::vector<std::vector<double>> &x,
                  const std::vector<int> &y, const std::vector<double> &w,
                  double bias, double l2) {
  const double eps = 1e-12;
  double loss = 0;
  for (size_t i = 0; i < x.size(); ++i) {
    double z = bias;
    for (size_t j = 0; j < w.size(); ++j) z += w[j] * x[i][j];
    double p = Sigmoid(z);
    p = std::min(1.0 - eps, std::max(eps, p));
    loss += y[i] == 1 ? -std::log(p) : -std::log(1.0 - p);
  }
  loss /= static_cast<double>(x.size());
  double reg = 0;
  for (double v : w) reg += v * v;
  return loss + 0.5 * l2 * reg;
}

void LogRegGradient(const std::vector<std::vector<double>> &x,
                    const std::vector<int> &y, const std::vector<double> &w,
                    double bias, double l2, std::vector<double> *grad_w,
                    double *grad_bias) {
  grad_w->assign(w.size(), 0.0);
  *grad_bias = 0;
  for (size_t i = 0; i < x.size(); ++i) {
    double z = bias;
    for (size_t j = 0; j < w.size(); ++j) z += w[j] * x[i][j];
    double err = Sigmoid(z) - static_cast<double>(y[i]);
    for (size_t j = 0; j < w.size(); ++j) (*grad_w)[j] += err * x[i][j];
    *grad_bias += err;
  }
  double inv_n = 1.0 / static_cast<double>(x.size());
  for (size_t j = 0; j < w.size(); ++j) {
    (*grad_w)[j] = (*grad_w)[j] * inv_n + l2 * w[j];
  }
  *grad_bias *= inv_n;
}

LogRegModel TrainLogReg(const std::vector<FeatureVector> &rows,
                        const std::vector<bool> &labels,
                        const TrainOptions &options) {
  if (rows.empty()) throw IndicatorError("cannot train on an empty dataset");
  if (rows.size() != labels.size()) {
    throw IndicatorError("feature/label count mismatch");
  }
  std::vector<std::vector<double>> x;
  x.reserve(rows.size());
  for (const FeatureVector &row : rows) {
    x.push_back(FeatureRow(row, options.with_text));
  }

  LogRegModel model;
  model.with_text = options.with_text;
  model.iterations = options.iterations;
  model.learning_rate = options.learning_rate;
  model.l2 = options.l2;

  // Standardize the numeric block in place.
  model.feature_mean.assign(kNumericFeatures, 0.0);
  model.feature_std.assign(kNumericFeatures, 1.0);
  for (size_t j = 0; j < kNumericFeatures; ++j) {
    double mean = 0;
    for (const auto &row : x) mean += row[j];
    mean /= static_cast<double>(x.size());
    double var = 0;
    for (const auto &row : x) var += (row[j] - mean) * (row[j] - mean);
    var /= static_cast<double>(x.size());
    double std_dev = std::sqrt(var);
    if (std_dev < 1e-12) std_dev = 1.0;  // constant feature: leave unscaled
    model.feature_mean[j] = mean;
    model.feature_std[j] = std_dev;
    for (auto &row : x) row[j] = (row[j] - mean) / std_dev;
  }

  std::vector<int> y;
  y.reserve(labels.size());
  bool any_pos = false, any_neg = false;
  for (bool label : labels) {
    y.push_back(label ? 1 : 0);
    (label ? any_pos : any_neg) = true;
  }
  model.single_class = !(any_pos && any_neg);

  std::vector<double> w(x[0].size(), 0.0);
  double bias = 0;
  std::vector<double> grad_w;
  double grad_bias = 0;
  for (int it = 0; it < options.iterations; ++it) {
    LogRegGradient(x, y, w, bias, options.l2, &grad_w, &grad_bias);
    for (size_t j = 0; j < w.size(); ++j) {
      w[j] -= options.learning_rate * grad_w[j];
    }
    bias -= options.learning_rate * grad_bias;
  }
  model.weights = std::move(w);
  model.bias = bias;
  model.final_loss = LogRegLoss(x, y, model.weights, bias, options.l2);
  return model;
}

double LogRegModel::PredictProbability(const FeatureVector &features) const {
  std::vector<double> row = FeatureRow(features, with_text);
  if (row.size() != weights.size()) {
    throw IndicatorError("feature row size " + std::to_string(row.size()) +
                         " does not match model size " +
                         std::to_string(weights.size()));
  }
  double z = bias;
  for (size_t j = 0; j < kNumericFeatures; ++j) {
    z += weights[j] * ((row[j] - feature_mean[j]) / feature_std[j]);
  }
  for (size_t j = kNumericFeatures; j < row.size(); ++j) {
    z += weights[j] * row[j];
  }
  return Sigmoid(z);
}

void LogRegModel::Save(const std::string &path) const {
  json obj = json::object();
  obj["format"] = "sanipipe-logreg";
  obj["version"] = 1;
  obj["weights"] = weights;
  obj["bias"] = bias;
  obj["feature_mean"] = feature_mean;
  obj["feature_std"] = feature_std;
  obj["with_text"] = with_text;
  obj["iterations"] = iterations;
  obj["learning_rate"] = learning_rate;
  obj["l2"] = l2;
  obj["final_loss"] = final_loss;
  obj["single_class"] = single_class;
  WriteFile(path, obj.dump(2) + "\n");
}

LogRegModel LogRegModel::Load(const std::string &path) {
  json obj;
  try {
    obj = json::parse(ReadFile(path));
  } catch (const json::parse_error &e) {
    throw IndicatorError(path + ": invalid JSON: " + e.what());
  }
  if (!obj.is_object() || obj.value("format", "") != "sanipipe-logreg") {
    throw IndicatorError(path + ": not a classifier model file");
  }
  LogRegModel model;
  model.weights = obj.value("weights", std::vector<double>{});
  model.bias = obj.value("bias", 0.0);
  model.feature_mean = obj.value("feature_mean", std::vector<double>{});
  model.feature_std = obj.value("feature_std", std::vector<double>{});
  model.with_text = obj.value("with_text", false);
  model.iterations = obj.value("iterations", 0);
  model.learning_rate = obj.value("learning_rate", 0.0);
  model.l2 = obj.value("l2", 0.0);
  model.final_loss = obj.value("final_loss", 0.0);
  model.single_class = obj.value("single_class", false);
  if (model.feature_mean.size() != kNumericFeatures ||
      model.feature_std.size() != kNumericFeatures ||
      model.weights.size() < kNumericFeatures + kNumSemanticTypes) {
    throw IndicatorError(path + ": model dimensions are inconsistent");
  }
  return model;
}

// ---------------------------------------------------------------------------
// Classifier indicators
// ---------------------------------------------------------------------------

namespace {

RiskDecision ClassifierDecision(const LogRegModel &model, IndicatorId id,
                                const std::string &doc_id, size_t start,
                                size_t end, const FeatureVector &features,
                                double threshold) {
  RiskDecision decision;
  decision.doc_id = doc_id;
  decision.start = start;
  decision.end = end;
  decision.indicator = id;
  decision.score = model.PredictProbability(features);
  decision.risky = decision.score > threshold;  // strict: 0.5 at 0.5 is safe
  return decision;
}

}  // namespace

RiskDecision ProbIndicator(const LogRegModel &model, const std::string &doc_id,
                           size_t start, size_t end,
                           const FeatureVector &features, double threshold) {
  return ClassifierDecision(model, IndicatorId::PROB, doc_id, start, end,
                            features, threshold);
}

RiskDecision SpanClsIndicator(const LogRegModel &model,
                              const std::string &doc_id, size_t start,
                              size_t end, const FeatureVector &features,
                              double threshold) {
  return ClassifierDecision(model, IndicatorId::SPANCLS, doc_id, start, end,
                            features, threshold);
}

// ---------------------------------------------------------------------------
// Perturbation indicator
// ---------------------------------------------------------------------------

namespace {

struct SpanTokens {
  size_t begin = 0;  // token indices
  size_t end = 0;
  bool empty() const { return begin >= end; }
};

void ValidateDocSpans(const DocSpans &spans) {
  if (spans.cluster_of.size() != spans.spans.size()) {
    throw IndicatorError("cluster assignment does not cover all spans");
  }
  for (int c : spans.cluster_of) {
    if (c < 0 || static_cast<size_t>(c) >= spans.cluster_ids.size()) {
      throw IndicatorError("cluster index out of range");
    }
  }
  std::vector<std::pair<size_t, size_t>> sorted = spans.spans;
  std::sort(sorted.begin(), sorted.end());
  for (size_t i = 1; i < sorted.size(); ++i) {
    if (sorted[i].first < sorted[i - 1].second) {
      throw IndicatorError("perturbation spans overlap");
    }
  }
}

std::vector<SpanTokens> MapSpansToTokens(
    const std::vector<Token> &tokens,
    const std::vector<std::pair<size_t, size_t>> &spans) {
  std::vector<SpanTokens> out(spans.size());
  for (size_t s = 0; s < spans.size(); ++s) {
    size_t begin = tokens.size();
    size_t end = 0;
    for (size_t t = 0; t < tokens.size(); ++t) {
      if (tokens[t].start < spans[s].second &&
          spans[s].first < tokens[t].end) {
        begin = std::min(begin, t);
        end = std::max(end, t + 1);
      }
    }
    if (end > begin) {
      out[s].begin = begin;
      out[s].end = end;
    } else {
      out[s].begin = out[s].end = 0;  // span covers no token
    }
  }
  return out;
}

double MeanSpanLogProb(const Scorer &scorer,
                       const std::vector<std::string> &tokens,
                       const SpanTokens &range) {
  std::vector<double> lp = scorer.SpanLogProbs(tokens, range.begin, range.end);
  double sum = 0;
  for (double v : lp) sum += v;
  return sum / static_cast<double>(lp.size());
}

}  // namespace

std::vector<InfluenceRecord> AllInfluences(const Document &doc,
                                           const DocSpans &spans,
                                           const Scorer &scorer) {
  ValidateDocSpans(spans);
  std::vector<InfluenceRecord> records;
  if (spans.spans.empty()) return records;

  std::vector<Token> tokens = Tokenize(doc.text);
  std::vector<std::string> surfaces;
  surfaces.reserve(tokens.size());
  for (const Token &token : tokens) surfaces.push_back(token.surface);
  std::vector<SpanTokens> ranges = MapSpansToTokens(tokens, spans.spans);

  const int num_clusters = static_cast<int>(spans.cluster_ids.size());
  for (size_t target = 0; target < spans.spans.size(); ++target) {
    if (ranges[target].empty()) continue;  // no tokens to score
    double base = MeanSpanLogProb(scorer, surfaces, ranges[target]);
    for (int cluster = 0; cluster < num_clusters; ++cluster) {
      if (cluster == spans.cluster_of[target]) continue;
      std::vector<std::string> perturbed = surfaces;
      bool touched = false;
      for (size_t s = 0; s < spans.spans.size(); ++s) {
        if (spans.cluster_of[s] != cluster) continue;
        touched = true;
        for (size_t t = ranges[s].begin; t < ranges[s].end; ++t) {
          perturbed[t] = kMaskToken;
        }
      }
      if (!touched) continue;  // no span carries this cluster id
      InfluenceRecord record;
      record.target_index = target;
      record.perturbed_cluster = cluster;
      record.delta = base - MeanSpanLogProb(scorer, perturbed, ranges[target]);
      records.push_back(record);
    }
  }
  return records;
}

std::vector<InfluenceRecord> PerturbInfluence(const Document &doc,
                                              const DocSpans &spans,
                                              const Scorer &scorer,
                                              size_t target_index) {
  if (target_index >= spans.spans.size()) {
    throw IndicatorError("perturbation target index out of range");
  }
  std::vector<InfluenceRecord> records;
  for (InfluenceRecord &record : AllInfluences(doc, spans, scorer)) {
    if (record.target_index == target_index) records.push_back(record);
  }
  return records;
}

std::set<size_t> PerturbRiskySpans(const std::vector<InfluenceRecord> &records,
                                   const DocSpans &spans, double threshold) {
  std::set<int> risky_clusters;
  for (const InfluenceRecord &record : records) {
    if (record.delta > threshold) risky_clusters.insert(record.perturbed_cluster);
  }
  std::set<size_t> risky;
  for (size_t s = 0; s < spans.spans.size(); ++s) {
    if (risky_clusters.count(spans.cluster_of[s]) != 0) risky.insert(s);
  }
  return risky;
}

std::set<size_t> PerturbIndicator(const Document &doc, const DocSpans &spans,
                                  const Scorer &scorer, double threshold) {
  return PerturbRiskySpans(AllInfluences(doc, spans, scorer), spans, threshold);
}

TuneResult TunePerturbThreshold(const Corpus &corpus,
                                const std::map<std::string, DocSpans> &spans,
                                const Scorer &scorer) {
  // Influences are threshold-free; compute them once per document.
  std::map<std::string, std::vector<InfluenceRecord>> influences;
  std::set<double> candidate_set;
  for (const Document &doc : corpus) {
    auto it = spans.find(doc.doc_id);
    if (it == spans.end()) continue;
    std::vector<InfluenceRecord> records = AllInfluences(doc, it->second, scorer);
    for (const InfluenceRecord &record : records) {
      candidate_set.insert(record.delta);
    }
    influences[doc.doc_id] = std::move(records);
  }

  TuneResult result;
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> candidates;
  if (candidate_set.empty()) {
    // Nothing observed: any threshold behaves the same, report +infinity.
    result.degenerate = true;
  } else {
    // Below the smallest delta every flagged cluster masks; above the largest
    // nothing does. Both extremes are part of the grid.
    candidates.push_back(-inf);
    candidates.insert(candidates.end(), candidate_set.begin(),
                      candidate_set.end());
  }
  candidates.push_back(inf);

  Evaluator evaluator(&corpus, nullptr);
  double best_objective = -1;
  for (double threshold : candidates) {
    std::map<std::string, MaskSet> masks;
    for (const Document &doc : corpus) {
      MaskSet set;
      set.doc_id = doc.doc_id;
      auto it = spans.find(doc.doc_id);
      if (it != spans.end()) {
        std::set<size_t> risky = PerturbRiskySpans(influences[doc.doc_id],
                                                   it->second, threshold);
        for (size_t s : risky) set.masks.push_back(it->second.spans[s]);
        std::sort(set.masks.begin(), set.masks.end());
      }
      masks.emplace(doc.doc_id, std::move(set));
    }
    TokenPrf prf = evaluator.TokenScores(masks);
    SweepPoint point;
    point.threshold = threshold;
    point.precision = prf.precision;
    point.recall_direct =
        EntityRecall(corpus, masks, IdentifierKind::DIRECT);
    point.recall_quasi = EntityRecall(corpus, masks, IdentifierKind::QUASI);
    point.objective = point.precision + point.recall_direct + point.recall_quasi;
    result.sweep.push_back(point);
    // Strict improvement keeps the smallest threshold on ties (candidates
    // are scanned in ascending order).
    if (point.objective > best_objective) {
      best_objective = point.objective;
      result.threshold = threshold;
      result.objective = point.objective;
    }
  }
  return result;
}

std::string SweepToCsv(const std::vector<SweepPoint> &sweep) {
  std::ostringstream out;
  out << "threshold,precision,recall_direct,recall_quasi,objective\n";
  char buf[160];
  for (const SweepPoint &point : sweep) {
    std::snprintf(buf, sizeof(buf), "%g,%.4f,%.4f,%.4f,%.4f", point.threshold,
                  point.precision, point.recall_direct, point.recall_quasi,
                  point.objective);
    out << buf << "\n";
  }
  return out.str();
}

// ---------------------------------------------------------------------------
// Sequence labeling indicator
// ---------------------------------------------------------------------------

std::set<size_t> SeqLabRiskySpans(
    const std::vector<TokenLabel> &labels, const std::vector<Token> &tokens,
    const std::vector<std::pair<size_t, size_t>> &spans, MatchMode mode,
    const std::string &doc_id) {
  if (labels.size() != tokens.size()) {
    throw IndicatorError("doc \"" + doc_id + "\": " +
                         std::to_string(labels.size()) +
                         " token labels for " + std::to_string(tokens.size()) +
                         " tokens");
  }
  std::set<size_t> risky;
  for (size_t s = 0; s < spans.size(); ++s) {
    bool any = false, all = true, overlapped = false;
    for (size_t t = 0; t < tokens.size(); ++t) {
      if (tokens[t].start < spans[s].second &&
          spans[s].first < tokens[t].end) {
        overlapped = true;
        if (labels[t] == TokenLabel::MASK) {
          any = true;
        } else {
          all = false;
        }
      }
    }
    if (!overlapped) continue;
    if (mode == MatchMode::STRICT ? all : any) risky.insert(s);
  }
  return risky;
}

std::map<std::string, std::vector<TokenLabel>> LoadTokenPredictions(
    const std::string &path) {
  LineReader reader(path);
  std::map<std::string, std::vector<TokenLabel>> out;
  std::string line;
  while (reader.ReadLine(&line)) {
    if (line.empty()) continue;
    const std::string where = path + ":" + std::to_string(reader.line_number());
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::parse_error &e) {
      throw IndicatorError(where + ": invalid JSON: " + e.what());
    }
    if (!obj.is_object() || !obj.contains("doc_id") ||
        !obj["doc_id"].is_string() || !obj.contains("labels") ||
        !obj["labels"].is_array()) {
      throw IndicatorError(where + ": expected {\"doc_id\", \"labels\"}");
    }
    std::string doc_id = obj["doc_id"].get<std::string>();
    if (out.count(doc_id) != 0) {
      throw IndicatorError(where + ": duplicate doc_id \"" + doc_id + "\"");
    }
    std::vector<TokenLabel> labels;
    for (const json &l : obj["labels"]) {
      if (!l.is_string()) throw IndicatorError(where + ": bad label");
      std::string name = l.get<std::string>();
      if (name == "MASK") {
        labels.push_back(TokenLabel::MASK);
      } else if (name == "NO_MASK") {
        labels.push_back(TokenLabel::NO_MASK);
      } else {
        throw IndicatorError(where + ": unknown label \"" + name + "\"");
      }
    }
    out.emplace(std::move(doc_id), std::move(labels));
  }
  return out;
}

void SaveTokenPredictions(
    const std::map<std::string, std::vector<TokenLabel>> &predictions,
    const std::string &path) {
  std::ostringstream out;
  for (const auto &[doc_id, labels] : predictions) {
    json obj = json::object();
    obj["doc_id"] = doc_id;
    json arr = json::array();
    for (TokenLabel label : labels) {
      arr.push_back(label == TokenLabel::MASK ? "MASK" : "NO_MASK");
    }
    obj["labels"] = std::move(arr);
    out << obj.dump() << "\n";
  }
  WriteFile(path, out.str());
}

// ---------------------------------------------------------------------------
// Web search indicators
// ---------------------------------------------------------------------------

RiskDecision WebUrlIndicator(const std::string &doc_id, size_t start,
                             size_t end, const std::set<std::string> &span_urls,
                             const std::set<std::string> &person_urls) {
  size_t common = 0;
  for (const std::string &url : span_urls) {
    if (person_urls.count(url) != 0) ++common;
  }
  RiskDecision decision;
  decision.doc_id = doc_id;
  decision.start = start;
  decision.end = end;
  decision.indicator = IndicatorId::WEBSEARCH;
  decision.risky = common > 0;
  decision.score = static_cast<double>(common);
  return decision;
}

RiskDecision WebHitsIndicator(const std::string &doc_id, size_t start,
                              size_t end, uint64_t total_hits, uint64_t lower,
                              std::optional<uint64_t> upper) {
  RiskDecision decision;
  decision.doc_id = doc_id;
  decision.start = start;
  decision.end = end;
  decision.indicator = IndicatorId::WEBSEARCH;
  decision.risky = total_hits >= lower && (!upper || total_hits <= *upper);
  decision.score = static_cast<double>(total_hits);
  return decision;
}

// ---------------------------------------------------------------------------
// Combination
// ---------------------------------------------------------------------------

CombineResult CombineDecisions(const std::vector<RiskDecision> &decisions,
                               int k) {
  if (k < 1 || k > kNumIndicators) {
    throw IndicatorError("vote threshold k must be in [1, " +
                         std::to_string(kNumIndicators) + "], got " +
                         std::to_string(k));
  }
  std::map<std::tuple<std::string, size_t, size_t>, std::set<IndicatorId>> votes;
  std::map<std::tuple<std::string, size_t, size_t>, std::set<IndicatorId>> seen;
  std::set<IndicatorId> present;
  for (const RiskDecision &d : decisions) {
    auto key = std::make_tuple(d.doc_id, d.start, d.end);
    if (!seen[key].insert(d.indicator).second) {
      throw IndicatorError("indicator " +
                           std::string(ToString(d.indicator)) +
                           " voted twice on span [" + std::to_string(d.start) +
                           ", " + std::to_string(d.end) + ") of doc \"" +
                           d.doc_id + "\"");
    }
    present.insert(d.indicator);
    if (d.risky) votes[key].insert(d.indicator);
  }
  CombineResult result;
  result.k_exceeds_indicators = static_cast<size_t>(k) > present.size();
  for (const auto &[key, indicator_votes] : votes) {
    if (indicator_votes.size() >= static_cast<size_t>(k)) {
      result.risky.insert(key);
    }
  }
  return result;
}

}  // namespace sanipipe
