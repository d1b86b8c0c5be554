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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "sanipipe/indicators.h"
#include "sanipipe/io.h"
#include "testutil.hpp"

using namespace sanipipe;
using namespace sanipipe::testutil;

namespace {

// Numeric-only feature row centered on one aggregate level.
FeatureVector NumericRow(double base, SemanticType type) {
  FeatureVector f;
  f.p_min = base - 0.5;
  f.p_max = base + 0.5;
  f.p_avg = base;
  f.p_mdn = base;
  f.p_sum = 3 * base;
  f.nb_words = 3;
  f.nb_subwords = 3;
  f.pii_type = type;
  return f;
}

// Model that always answers sigmoid(0) = 0.5, sized for numeric features.
LogRegModel ZeroModel() {
  LogRegModel model;
  model.weights.assign(kNumericFeatures + kNumSemanticTypes, 0.0);
  model.feature_mean.assign(kNumericFeatures, 0.0);
  model.feature_std.assign(kNumericFeatures, 1.0);
  return model;
}

// Four single-token spans over "vic aa bb cc", one cluster each.
DocSpans FourSpans() {
  DocSpans spans;
  spans.spans = {{0, 3}, {4, 6}, {7, 9}, {10, 12}};
  spans.cluster_of = {0, 1, 2, 3};
  spans.cluster_ids = {"e0", "e1", "e2", "e3"};
  return spans;
}

Document PlainDoc(const std::string &id, const std::string &text) {
  Document doc;
  doc.doc_id = id;
  doc.text = text;
  doc.annotations.emplace("a1", AnnotationSet{});
  return doc;
}

}  // namespace

TEST_CASE("indicator names round trip") {
  for (int i = 0; i < kNumIndicators; ++i) {
    IndicatorId id = static_cast<IndicatorId>(i);
    auto parsed = ParseIndicatorId(ToString(id));
    REQUIRE(parsed.has_value());
    CHECK(*parsed == id);
  }
  CHECK_FALSE(ParseIndicatorId("prob").has_value());
  CHECK_FALSE(ParseIndicatorId("NGRAM").has_value());
}

TEST_CASE("risk decision files round trip") {
  TempDir dir;
  std::vector<RiskDecision> decisions = {
      {"d1", 3, 9, IndicatorId::PROB, true, 0.83},
      {"d1", 3, 9, IndicatorId::WEBSEARCH, false, 12.0},
      {"d2", 0, 4, IndicatorId::SEQLAB, true, 1.0},
  };
  std::string path = dir.File("decisions.jsonl");
  SaveRiskDecisions(decisions, path);
  CHECK(LoadRiskDecisions(path) == decisions);

  std::string bad = WriteTemp(
      dir, "bad.jsonl",
      R"({"doc_id":"d","start":3,"end":9,"indicator":"ORACLE","risky":true,"score":0})"
      "\n");
  try {
    LoadRiskDecisions(bad);
    FAIL_CHECK("expected IndicatorError");
  } catch (const IndicatorError &e) {
    CHECK(std::string(e.what()).find(":1") != std::string::npos);
    CHECK(std::string(e.what()).find("ORACLE") != std::string::npos);
  }
  std::string inverted = WriteTemp(
      dir, "inv.jsonl",
      R"({"doc_id":"d","start":9,"end":3,"indicator":"PROB","risky":true,"score":0})"
      "\n");
  CHECK_THROWS_AS(LoadRiskDecisions(inverted), IndicatorError);
  std::string missing = WriteTemp(
      dir, "miss.jsonl", R"({"doc_id":"d","start":3,"end":9})" "\n");
  CHECK_THROWS_AS(LoadRiskDecisions(missing), IndicatorError);
}

TEST_CASE("log probability aggregates match hand computed rows") {
  Aggregates a = AggregateLogProbs({-5.7, -4.4, -3.3, -3.1, -1.9});
  CHECK(a.min == doctest::Approx(-5.7));
  CHECK(a.max == doctest::Approx(-1.9));
  CHECK(a.mean == doctest::Approx(-3.68));
  CHECK(a.median == doctest::Approx(-3.3));
  CHECK(a.sum == doctest::Approx(-18.4));

  Aggregates b = AggregateLogProbs({-4.3, -4.2, -3.9});
  CHECK(b.min == doctest::Approx(-4.3));
  CHECK(b.max == doctest::Approx(-3.9));
  CHECK(b.mean == doctest::Approx(-12.4 / 3.0));
  CHECK(b.median == doctest::Approx(-4.2));
  CHECK(b.sum == doctest::Approx(-12.4));

  Aggregates c = AggregateLogProbs({-1.5});
  CHECK(c.min == doctest::Approx(-1.5));
  CHECK(c.max == doctest::Approx(-1.5));
  CHECK(c.mean == doctest::Approx(-1.5));
  CHECK(c.median == doctest::Approx(-1.5));
  CHECK(c.sum == doctest::Approx(-1.5));

  // Even count: median is the mean of the two middle values.
  Aggregates d = AggregateLogProbs({-8.6, -4.2});
  CHECK(d.mean == doctest::Approx(-6.4));
  CHECK(d.median == doctest::Approx(-6.4));
  CHECK(d.sum == doctest::Approx(-12.8));

  Aggregates e = AggregateLogProbs({-4.0, -1.0, -3.0, -2.0});  // unsorted
  CHECK(e.min == doctest::Approx(-4.0));
  CHECK(e.max == doctest::Approx(-1.0));
  CHECK(e.mean == doctest::Approx(-2.5));
  CHECK(e.median == doctest::Approx(-2.5));
  CHECK(e.sum == doctest::Approx(-10.0));

  CHECK_THROWS_AS(AggregateLogProbs({}), IndicatorError);
}

TEST_CASE("aggregate invariants hold on random lists") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> value(-20.0, 0.0);
  for (int trial = 0; trial < 10000; ++trial) {
    size_t n = 1 + rng() % 12;
    std::vector<double> lp(n);
    for (double &v : lp) v = value(rng);
    Aggregates agg = AggregateLogProbs(lp);
    std::vector<double> sorted = lp;
    std::sort(sorted.begin(), sorted.end());
    CHECK(agg.min == sorted.front());
    CHECK(agg.max == sorted.back());
    CHECK(agg.min <= agg.median);
    CHECK(agg.median <= agg.max);
    CHECK(agg.min <= agg.mean + 1e-12);
    CHECK(agg.mean <= agg.max + 1e-12);
    CHECK(Near(agg.sum, agg.mean * static_cast<double>(n), 1e-9));
    double expected_median =
        n % 2 == 1 ? sorted[n / 2]
                   : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
    CHECK(agg.median == expected_median);
  }
}

TEST_CASE("span features come from the scorer and the token range") {
  LookupScorer scorer({{"36244", -5.7}, {"/", -4.4}, {"06", -3.3}}, -9.0);
  std::vector<std::string> tokens = {"case", "36244", "/", "06", "closed"};
  FeatureVector f =
      ExtractSpanFeatures(scorer, tokens, 1, 4, SemanticType::CODE, false);
  CHECK(f.p_min == doctest::Approx(-5.7));
  CHECK(f.p_max == doctest::Approx(-3.3));
  CHECK(f.p_avg == doctest::Approx(-13.4 / 3.0));
  CHECK(f.p_mdn == doctest::Approx(-4.4));
  CHECK(f.p_sum == doctest::Approx(-13.4));
  CHECK(f.nb_words == doctest::Approx(3.0));
  CHECK(f.nb_subwords == doctest::Approx(3.0));
  CHECK(f.pii_type == SemanticType::CODE);
  CHECK(f.text_features.empty());

  FeatureVector with_text =
      ExtractSpanFeatures(scorer, tokens, 1, 4, SemanticType::CODE, true);
  REQUIRE(with_text.text_features.size() == kTextFeatureDim);
  double norm = 0;
  for (float v : with_text.text_features) norm += double(v) * v;
  CHECK(Near(std::sqrt(norm), 1.0, 1e-6));

  CHECK_THROWS_AS(
      ExtractSpanFeatures(scorer, tokens, 2, 2, SemanticType::CODE, false),
      IndicatorError);
  CHECK_THROWS_AS(
      ExtractSpanFeatures(scorer, tokens, 4, 6, SemanticType::CODE, false),
      IndicatorError);
}

TEST_CASE("hashed text features are an order and case insensitive bag") {
  std::vector<float> zeros(kTextFeatureDim, 0.0f);
  CHECK(SpanTextFeatures("") == zeros);
  CHECK(SpanTextFeatures("... , -") == zeros);  // no alphanumeric token

  CHECK(SpanTextFeatures("tennis coach") == SpanTextFeatures("coach tennis"));
  CHECK(SpanTextFeatures("Tennis COACH") == SpanTextFeatures("tennis coach"));
  CHECK(SpanTextFeatures("muralist") == SpanTextFeatures("muralist"));
  CHECK(SpanTextFeatures("muralist") != SpanTextFeatures("winger"));

  // Repeated tokens weigh more but the vector stays unit length.
  std::vector<float> skewed = SpanTextFeatures("aa aa bb", 64);
  REQUIRE(skewed.size() == 64);
  double norm = 0;
  float largest = 0;
  for (float v : skewed) {
    norm += double(v) * v;
    largest = std::max(largest, v);
  }
  CHECK(Near(std::sqrt(norm), 1.0, 1e-6));
  CHECK(largest == doctest::Approx(2.0 / std::sqrt(5.0)));
}

TEST_CASE("feature rows lay out numerics then one hot then text") {
  FeatureVector f = NumericRow(-4.0, SemanticType::LOC);
  std::vector<double> row = FeatureRow(f, false);
  REQUIRE(row.size() == kNumericFeatures + kNumSemanticTypes);
  CHECK(row[0] == doctest::Approx(f.p_min));
  CHECK(row[6] == doctest::Approx(f.nb_subwords));
  for (int i = 0; i < kNumSemanticTypes; ++i) {
    double expected = i == static_cast<int>(SemanticType::LOC) ? 1.0 : 0.0;
    CHECK(row[kNumericFeatures + i] == expected);
  }
  f.text_features = SpanTextFeatures("sample text");
  std::vector<double> wide = FeatureRow(f, true);
  CHECK(wide.size() == kNumericFeatures + kNumSemanticTypes + kTextFeatureDim);
  // Without the flag the text block is ignored even when present.
  CHECK(FeatureRow(f, false).size() == kNumericFeatures + kNumSemanticTypes);
}

TEST_CASE("analytic gradient matches central finite differences") {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> feature(-2.0, 2.0);
  std::uniform_real_distribution<double> weight(-1.0, 1.0);
  const double eps = 1e-5;
  const double tol = 1e-6;
  for (int trial = 0; trial < 100; ++trial) {
    size_t n = 1 + rng() % 8;
    size_t d = 1 + rng() % 5;
    std::vector<std::vector<double>> x(n, std::vector<double>(d));
    std::vector<int> y(n);
    for (size_t i = 0; i < n; ++i) {
      for (size_t j = 0; j < d; ++j) x[i][j] = feature(rng);
      y[i] = rng() % 2;
    }
    std::vector<double> w(d);
    for (double &v : w) v = weight(rng);
    double bias = weight(rng);
    double l2 = trial % 2 == 0 ? 0.0 : 0.05;

    std::vector<double> grad_w;
    double grad_bias = 0;
    LogRegGradient(x, y, w, bias, l2, &grad_w, &grad_bias);
    REQUIRE(grad_w.size() == d);

    for (size_t j = 0; j < d; ++j) {
      std::vector<double> hi = w, lo = w;
      hi[j] += eps;
      lo[j] -= eps;
      double numeric = (LogRegLoss(x, y, hi, bias, l2) -
                        LogRegLoss(x, y, lo, bias, l2)) /
                       (2 * eps);
      CHECK(Near(grad_w[j], numeric, tol));
    }
    double numeric_bias = (LogRegLoss(x, y, w, bias + eps, l2) -
                           LogRegLoss(x, y, w, bias - eps, l2)) /
                          (2 * eps);
    CHECK(Near(grad_bias, numeric_bias, tol));
  }
}

TEST_CASE("training separates a linearly separable set") {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> jitter(-0.3, 0.3);
  std::vector<FeatureVector> rows;
  std::vector<bool> labels;
  for (int i = 0; i < 1000; ++i) {
    bool risky = i % 2 == 0;
    double base = (risky ? -6.0 : -1.5) + jitter(rng);
    SemanticType type = i % 3 == 0 ? SemanticType::PERSON : SemanticType::CODE;
    rows.push_back(NumericRow(base, type));
    labels.push_back(risky);
  }
  LogRegModel model = TrainLogReg(rows, labels, TrainOptions{});
  CHECK_FALSE(model.single_class);
  int correct = 0;
  for (size_t i = 0; i < rows.size(); ++i) {
    bool predicted = model.PredictProbability(rows[i]) > 0.5;
    if (predicted == labels[i]) ++correct;
  }
  CHECK(correct >= 990);
  CHECK(model.final_loss < 0.1);
}

TEST_CASE("one label training sets the single class flag") {
  std::vector<FeatureVector> rows = {NumericRow(-5, SemanticType::PERSON),
                                     NumericRow(-2, SemanticType::CODE)};
  LogRegModel all_risky = TrainLogReg(rows, {true, true}, TrainOptions{});
  CHECK(all_risky.single_class);
  CHECK(all_risky.PredictProbability(rows[0]) > 0.5);
  CHECK(all_risky.PredictProbability(rows[1]) > 0.5);

  LogRegModel all_safe = TrainLogReg(rows, {false, false}, TrainOptions{});
  CHECK(all_safe.single_class);
  CHECK(all_safe.PredictProbability(rows[0]) < 0.5);
}

TEST_CASE("classifier models round trip through disk") {
  std::vector<FeatureVector> rows;
  std::vector<bool> labels;
  for (int i = 0; i < 40; ++i) {
    rows.push_back(NumericRow(i % 2 == 0 ? -5.0 - 0.1 * i : -1.0,
                              SemanticType::MISC));
    labels.push_back(i % 2 == 0);
  }
  LogRegModel model = TrainLogReg(rows, labels, TrainOptions{});
  TempDir dir;
  std::string path = dir.File("model.json");
  model.Save(path);
  LogRegModel loaded = LogRegModel::Load(path);
  CHECK(loaded.weights == model.weights);
  CHECK(loaded.bias == model.bias);
  CHECK(loaded.feature_mean == model.feature_mean);
  CHECK(loaded.feature_std == model.feature_std);
  CHECK(loaded.with_text == model.with_text);
  CHECK(loaded.single_class == model.single_class);
  FeatureVector probe = NumericRow(-3.3, SemanticType::MISC);
  CHECK(loaded.PredictProbability(probe) ==
        doctest::Approx(model.PredictProbability(probe)));
  loaded.Save(dir.File("model2.json"));
  CHECK(ReadFile(dir.File("model2.json")) == ReadFile(path));

  WriteTemp(dir, "not_model.json", "{\"format\": \"other\"}\n");
  CHECK_THROWS_AS(LogRegModel::Load(dir.File("not_model.json")),
                  IndicatorError);
}

TEST_CASE("probability indicators apply a strict threshold") {
  LogRegModel model = ZeroModel();
  FeatureVector f = NumericRow(-4.0, SemanticType::PERSON);
  RiskDecision at_half = ProbIndicator(model, "d1", 3, 9, f, 0.5);
  CHECK(at_half.indicator == IndicatorId::PROB);
  CHECK(at_half.doc_id == "d1");
  CHECK(at_half.start == 3);
  CHECK(at_half.end == 9);
  CHECK(at_half.score == doctest::Approx(0.5));
  CHECK_FALSE(at_half.risky);  // 0.5 does not strictly exceed 0.5
  CHECK(ProbIndicator(model, "d1", 3, 9, f, 0.4999).risky);
  RiskDecision cls = SpanClsIndicator(model, "d1", 3, 9, f, 0.4999);
  CHECK(cls.indicator == IndicatorId::SPANCLS);
  CHECK(cls.risky);
}

TEST_CASE("type one hot separates identical aggregates") {
  std::vector<FeatureVector> rows;
  std::vector<bool> labels;
  for (int i = 0; i < 200; ++i) {
    bool person = i % 2 == 0;
    rows.push_back(NumericRow(
        -3.0, person ? SemanticType::PERSON : SemanticType::CODE));
    labels.push_back(person);
  }
  LogRegModel model = TrainLogReg(rows, labels, TrainOptions{});
  CHECK(model.PredictProbability(NumericRow(-3.0, SemanticType::PERSON)) >
        0.5);
  CHECK(model.PredictProbability(NumericRow(-3.0, SemanticType::CODE)) < 0.5);
}

TEST_CASE("text block separates identical numerics") {
  std::vector<FeatureVector> rows;
  std::vector<bool> labels;
  for (int i = 0; i < 200; ++i) {
    bool risky = i % 2 == 0;
    FeatureVector f = NumericRow(-3.0, SemanticType::DEM);
    f.text_features = SpanTextFeatures(risky ? "tax lawyer" : "winger");
    rows.push_back(std::move(f));
    labels.push_back(risky);
  }
  TrainOptions options;
  options.with_text = true;
  LogRegModel model = TrainLogReg(rows, labels, options);
  FeatureVector lawyer = NumericRow(-3.0, SemanticType::DEM);
  lawyer.text_features = SpanTextFeatures("tax lawyer");
  FeatureVector winger = NumericRow(-3.0, SemanticType::DEM);
  winger.text_features = SpanTextFeatures("winger");
  CHECK(model.PredictProbability(lawyer) > 0.5);
  CHECK(model.PredictProbability(winger) < 0.5);

  // An absent text block behaves as all zeros.
  FeatureVector empty_block = NumericRow(-3.0, SemanticType::DEM);
  FeatureVector zero_block = NumericRow(-3.0, SemanticType::DEM);
  zero_block.text_features = SpanTextFeatures("");
  CHECK(model.PredictProbability(empty_block) ==
        doctest::Approx(model.PredictProbability(zero_block)));
}

TEST_CASE("planted influences recover their deltas") {
  Document doc = PlainDoc("d1", "vic aa bb cc");
  DocSpans spans = FourSpans();
  PlantedScorer scorer({{"vic", {{"aa", 0.1}, {"bb", 2.0}, {"cc", 5.0}}}});

  std::vector<InfluenceRecord> records = AllInfluences(doc, spans, scorer);
  std::map<std::pair<size_t, int>, double> deltas;
  for (const InfluenceRecord &r : records) {
    deltas[{r.target_index, r.perturbed_cluster}] = r.delta;
  }
  CHECK(deltas.at({0, 1}) == doctest::Approx(0.1));
  CHECK(deltas.at({0, 2}) == doctest::Approx(2.0));
  CHECK(deltas.at({0, 3}) == doctest::Approx(5.0));
  // Anchors are not influenced by anything.
  CHECK(deltas.at({1, 0}) == doctest::Approx(0.0));
  CHECK(deltas.at({2, 3}) == doctest::Approx(0.0));
  // Every (target, other cluster) pair shows up exactly once.
  CHECK(records.size() == 12);

  CHECK(PerturbRiskySpans(records, spans, 3.0) == std::set<size_t>{3});
  CHECK(PerturbRiskySpans(records, spans, 0.5) == std::set<size_t>{2, 3});
  CHECK(PerturbRiskySpans(records, spans, 0.05) == std::set<size_t>{1, 2, 3});
  CHECK(PerturbRiskySpans(records, spans,
                          std::numeric_limits<double>::infinity())
            .empty());
  // Below every delta even the zero-influence clusters flip.
  CHECK(PerturbRiskySpans(records, spans, -1.0) ==
        std::set<size_t>{0, 1, 2, 3});

  CHECK(PerturbIndicator(doc, spans, scorer, 3.0) == std::set<size_t>{3});

  std::vector<InfluenceRecord> one = PerturbInfluence(doc, spans, scorer, 0);
  CHECK(one.size() == 3);
  for (const InfluenceRecord &r : one) CHECK(r.target_index == 0);
  CHECK_THROWS_AS(PerturbInfluence(doc, spans, scorer, 9), IndicatorError);
}

TEST_CASE("cluster members flip together") {
  Document doc = PlainDoc("d1", "vic aa xx aa");
  DocSpans spans;
  spans.spans = {{0, 3}, {4, 6}, {7, 9}, {10, 12}};
  spans.cluster_of = {0, 1, 2, 1};  // both "aa" spans share a cluster
  spans.cluster_ids = {"e0", "e1", "e2"};
  PlantedScorer scorer({{"vic", {{"aa", 4.0}}}});
  std::set<size_t> risky = PerturbIndicator(doc, spans, scorer, 3.0);
  CHECK(risky == std::set<size_t>{1, 3});
  // Masking "xx" leaves both "aa" tokens present: no influence.
  std::vector<InfluenceRecord> records = AllInfluences(doc, spans, scorer);
  for (const InfluenceRecord &r : records) {
    if (r.perturbed_cluster == 2) CHECK(r.delta == doctest::Approx(0.0));
  }
}

TEST_CASE("degenerate span sets produce no influence records") {
  Document doc = PlainDoc("d1", "vic aa");
  DocSpans spans;
  spans.spans = {{0, 3}, {4, 6}};
  spans.cluster_of = {0, 0};
  spans.cluster_ids = {"e0"};
  PlantedScorer scorer({{"vic", {{"aa", 4.0}}}});
  CHECK(AllInfluences(doc, spans, scorer).empty());
  CHECK(PerturbIndicator(doc, spans, scorer, -10.0).empty());

  DocSpans overlapping = FourSpans();
  overlapping.spans[1] = {2, 6};  // collides with the first span
  CHECK_THROWS_AS(AllInfluences(doc, overlapping, scorer), IndicatorError);
  DocSpans bad_cluster = FourSpans();
  bad_cluster.cluster_of[2] = 7;
  CHECK_THROWS_AS(AllInfluences(doc, bad_cluster, scorer), IndicatorError);
}

TEST_CASE("context free scorers show zero influence") {
  Document doc = PlainDoc("d1", "vic aa bb cc");
  DocSpans spans = FourSpans();
  LookupScorer scorer({{"vic", -7.0}, {"aa", -1.0}}, -3.0);
  for (const InfluenceRecord &r : AllInfluences(doc, spans, scorer)) {
    CHECK(r.delta == doctest::Approx(0.0));
  }
  CHECK(PerturbIndicator(doc, spans, scorer, 0.0).empty());
}

TEST_CASE("raising the perturbation threshold never adds spans") {
  std::mt19937_64 rng(47);
  std::uniform_real_distribution<double> drop(0.0, 6.0);
  std::uniform_real_distribution<double> threshold(-1.0, 7.0);
  for (int trial = 0; trial < 200; ++trial) {
    size_t m = 2 + rng() % 6;
    std::string text;
    std::vector<std::string> surfaces;
    for (size_t i = 0; i < m; ++i) {
      if (!text.empty()) text += ' ';
      surfaces.push_back("w" + std::to_string(i));
      text += surfaces.back();
    }
    std::vector<Token> tokens = Tokenize(text);
    DocSpans spans;
    size_t clusters = 1 + rng() % m;
    for (size_t i = 0; i < m; ++i) {
      spans.spans.emplace_back(tokens[i].start, tokens[i].end);
      spans.cluster_of.push_back(static_cast<int>(rng() % clusters));
    }
    for (size_t c = 0; c < clusters; ++c) {
      spans.cluster_ids.push_back("e" + std::to_string(c));
    }
    std::map<std::string, std::map<std::string, double>> influence;
    for (size_t i = 0; i < m; ++i) {
      for (size_t j = 0; j < m; ++j) {
        if (i != j && rng() % 3 == 0) {
          influence[surfaces[i]][surfaces[j]] = drop(rng);
        }
      }
    }
    PlantedScorer scorer(influence);
    Document doc = PlainDoc("d", text);
    std::vector<InfluenceRecord> records = AllInfluences(doc, spans, scorer);

    double t1 = threshold(rng), t2 = threshold(rng);
    if (t1 > t2) std::swap(t1, t2);
    std::set<size_t> low = PerturbRiskySpans(records, spans, t1);
    std::set<size_t> high = PerturbRiskySpans(records, spans, t2);
    for (size_t s : high) CHECK(low.count(s) == 1);
    // Risky sets are unions of whole clusters.
    for (size_t s : low) {
      for (size_t other = 0; other < m; ++other) {
        if (spans.cluster_of[other] == spans.cluster_of[s]) {
          CHECK(low.count(other) == 1);
        }
      }
    }
  }
}

TEST_CASE("threshold tuning recovers the isolating threshold") {
  Corpus corpus;
  corpus.push_back(MakeDoc(
      "d1", "vic aa bb cc",
      {MakeMention(10, 12, SemanticType::CODE, IdentifierKind::DIRECT, "e3")}));
  std::map<std::string, DocSpans> spans;
  spans.emplace("d1", FourSpans());
  PlantedScorer scorer({{"vic", {{"aa", 0.1}, {"bb", 2.0}, {"cc", 5.0}}}});

  TuneResult result = TunePerturbThreshold(corpus, spans, scorer);
  CHECK_FALSE(result.degenerate);
  // Masking exactly the strongest cluster needs a threshold in [2, 5); the
  // grid picks the smallest observed delta that achieves it.
  CHECK(result.threshold == doctest::Approx(2.0));
  CHECK(result.objective == doctest::Approx(3.0));
  // Grid: -inf, the four observed deltas {0, 0.1, 2, 5}, +inf.
  CHECK(result.sweep.size() == 6);
  for (const SweepPoint &point : result.sweep) {
    CHECK(point.objective >= 0.0);
    CHECK(point.objective <= 3.0 + 1e-12);
    CHECK(point.objective ==
          doctest::Approx(point.precision + point.recall_direct +
                          point.recall_quasi));
  }

  std::string csv = SweepToCsv(result.sweep);
  CHECK(csv.rfind("threshold,precision,recall_direct,recall_quasi,objective\n",
                  0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') ==
        static_cast<long>(result.sweep.size()) + 1);
  CHECK(csv.find("-inf") != std::string::npos);
}

TEST_CASE("tuning with no influence records is degenerate") {
  Corpus corpus;
  corpus.push_back(MakeDoc(
      "d1", "vic aa",
      {MakeMention(0, 3, SemanticType::PERSON, IdentifierKind::DIRECT, "e0")}));
  std::map<std::string, DocSpans> spans;
  DocSpans single;
  single.spans = {{0, 3}, {4, 6}};
  single.cluster_of = {0, 0};
  single.cluster_ids = {"e0"};
  spans.emplace("d1", single);
  LookupScorer scorer({}, -2.0);
  TuneResult result = TunePerturbThreshold(corpus, spans, scorer);
  CHECK(result.degenerate);
  CHECK(std::isinf(result.threshold));
  CHECK(result.threshold > 0);
  CHECK(result.sweep.size() == 1);
}

TEST_CASE("sequence labels flag spans by match mode") {
  std::string text = "aa bb cc";
  std::vector<Token> tokens = Tokenize(text);
  REQUIRE(tokens.size() == 3);
  std::vector<TokenLabel> labels = {TokenLabel::MASK, TokenLabel::MASK,
                                    TokenLabel::NO_MASK};
  std::vector<std::pair<size_t, size_t>> spans = {
      {0, 8},  // all three tokens: one overlapped token says NO_MASK
      {0, 5},  // first two tokens: unanimous MASK
      {6, 8},  // last token only: unanimous NO_MASK
      {2, 3},  // whitespace only: overlaps no token
  };
  std::set<size_t> strict =
      SeqLabRiskySpans(labels, tokens, spans, MatchMode::STRICT, "d1");
  std::set<size_t> partial =
      SeqLabRiskySpans(labels, tokens, spans, MatchMode::PARTIAL, "d1");
  CHECK(strict == std::set<size_t>{1});
  CHECK(partial == std::set<size_t>{0, 1});

  std::vector<TokenLabel> all_safe(3, TokenLabel::NO_MASK);
  CHECK(SeqLabRiskySpans(all_safe, tokens, spans, MatchMode::PARTIAL, "d1")
            .empty());
  std::vector<TokenLabel> all_mask(3, TokenLabel::MASK);
  // Even then the uncovered span stays out.
  CHECK(SeqLabRiskySpans(all_mask, tokens, spans, MatchMode::STRICT, "d1") ==
        std::set<size_t>{0, 1, 2});

  try {
    SeqLabRiskySpans({TokenLabel::MASK}, tokens, spans, MatchMode::STRICT,
                     "doc-seven");
    FAIL_CHECK("expected IndicatorError");
  } catch (const IndicatorError &e) {
    CHECK(std::string(e.what()).find("doc-seven") != std::string::npos);
  }
}

TEST_CASE("strict flags are a subset of partial flags") {
  std::mt19937_64 rng(59);
  std::vector<std::string> vocab = {"ala", "bo", "cyd", "dee"};
  for (int trial = 0; trial < 1000; ++trial) {
    std::string text = RandomText(rng, vocab, 2, 15);
    std::vector<Token> tokens = Tokenize(text);
    size_t len = UTF8Length(text);
    std::vector<TokenLabel> labels;
    for (size_t t = 0; t < tokens.size(); ++t) {
      labels.push_back(rng() % 2 == 0 ? TokenLabel::MASK
                                      : TokenLabel::NO_MASK);
    }
    std::vector<std::pair<size_t, size_t>> spans;
    size_t count = rng() % 6;
    for (size_t s = 0; s < count; ++s) {
      size_t start = rng() % len;
      size_t end = start + 1 + rng() % 6;
      spans.emplace_back(start, std::min(end, len));
    }
    std::set<size_t> strict =
        SeqLabRiskySpans(labels, tokens, spans, MatchMode::STRICT, "d");
    std::set<size_t> partial =
        SeqLabRiskySpans(labels, tokens, spans, MatchMode::PARTIAL, "d");
    for (size_t s : strict) CHECK(partial.count(s) == 1);
  }
}

TEST_CASE("token prediction files round trip") {
  std::map<std::string, std::vector<TokenLabel>> predictions;
  predictions["d1"] = {TokenLabel::MASK, TokenLabel::NO_MASK};
  predictions["d2"] = {};
  TempDir dir;
  std::string path = dir.File("seqlab.jsonl");
  SaveTokenPredictions(predictions, path);
  CHECK(LoadTokenPredictions(path) == predictions);

  std::string bad = WriteTemp(
      dir, "bad.jsonl", R"({"doc_id":"d","labels":["MASK","MAYBE"]})" "\n");
  CHECK_THROWS_AS(LoadTokenPredictions(bad), IndicatorError);
  std::string dup = WriteTemp(
      dir, "dup.jsonl",
      R"({"doc_id":"d","labels":[]})" "\n" R"({"doc_id":"d","labels":[]})" "\n");
  CHECK_THROWS_AS(LoadTokenPredictions(dup), IndicatorError);
}

TEST_CASE("web url indicator checks result overlap") {
  std::set<std::string> span_urls = {"example.com/a", "example.com/b",
                                     "blog.net/x"};
  std::set<std::string> person_urls = {"example.com/b", "blog.net/x",
                                       "other.org"};
  RiskDecision hit = WebUrlIndicator("d1", 3, 9, span_urls, person_urls);
  CHECK(hit.indicator == IndicatorId::WEBSEARCH);
  CHECK(hit.risky);
  CHECK(hit.score == doctest::Approx(2.0));

  RiskDecision disjoint =
      WebUrlIndicator("d1", 3, 9, {"a.com"}, {"b.com", "c.com"});
  CHECK_FALSE(disjoint.risky);
  CHECK(disjoint.score == doctest::Approx(0.0));
  CHECK_FALSE(WebUrlIndicator("d1", 3, 9, {}, person_urls).risky);
  CHECK_FALSE(WebUrlIndicator("d1", 3, 9, span_urls, {}).risky);

  // Intersection is symmetric.
  CHECK(WebUrlIndicator("d1", 3, 9, person_urls, span_urls).risky ==
        WebUrlIndicator("d1", 3, 9, span_urls, person_urls).risky);
}

TEST_CASE("web hit bounds are inclusive") {
  CHECK_FALSE(WebHitsIndicator("d1", 0, 4, 99).risky);
  CHECK(WebHitsIndicator("d1", 0, 4, 100).risky);
  CHECK(WebHitsIndicator("d1", 0, 4, 100).score == doctest::Approx(100.0));
  CHECK(WebHitsIndicator("d1", 0, 4, 1000000000000ull).risky);
  CHECK(WebHitsIndicator("d1", 0, 4, 500, 100, 500).risky);
  CHECK_FALSE(WebHitsIndicator("d1", 0, 4, 501, 100, 500).risky);
  CHECK(WebHitsIndicator("d1", 0, 4, 0, 0).risky);
}

TEST_CASE("vote combination applies k of n") {
  auto vote = [](const std::string &doc, size_t start, size_t end,
                 IndicatorId id, bool risky) {
    RiskDecision d;
    d.doc_id = doc;
    d.start = start;
    d.end = end;
    d.indicator = id;
    d.risky = risky;
    return d;
  };
  std::vector<RiskDecision> decisions = {
      vote("d1", 0, 4, IndicatorId::PROB, true),
      vote("d1", 0, 4, IndicatorId::SPANCLS, true),
      vote("d1", 0, 4, IndicatorId::PERTURB, false),
      vote("d1", 6, 9, IndicatorId::PROB, true),
      vote("d1", 6, 9, IndicatorId::SPANCLS, false),
      vote("d2", 0, 4, IndicatorId::PROB, false),
  };
  auto key = [](const std::string &doc, size_t start, size_t end) {
    return std::make_tuple(doc, start, end);
  };
  CombineResult k1 = CombineDecisions(decisions, 1);
  CHECK(k1.risky ==
        decltype(k1.risky){key("d1", 0, 4), key("d1", 6, 9)});
  CHECK_FALSE(k1.k_exceeds_indicators);
  CombineResult k2 = CombineDecisions(decisions, 2);
  CHECK(k2.risky == decltype(k2.risky){key("d1", 0, 4)});
  CombineResult k3 = CombineDecisions(decisions, 3);
  CHECK(k3.risky.empty());
  CHECK_FALSE(k3.k_exceeds_indicators);  // three indicators are present
  CombineResult k4 = CombineDecisions(decisions, 4);
  CHECK(k4.risky.empty());
  CHECK(k4.k_exceeds_indicators);

  CHECK_THROWS_AS(CombineDecisions(decisions, 0), IndicatorError);
  CHECK_THROWS_AS(CombineDecisions(decisions, 6), IndicatorError);

  std::vector<RiskDecision> duplicated = decisions;
  duplicated.push_back(vote("d1", 0, 4, IndicatorId::PROB, false));
  CHECK_THROWS_AS(CombineDecisions(duplicated, 1), IndicatorError);
  // Same offsets in another document are a distinct span.
  std::vector<RiskDecision> cross = decisions;
  cross.push_back(vote("d3", 0, 4, IndicatorId::PROB, true));
  CHECK(CombineDecisions(cross, 1).risky.count(key("d3", 0, 4)) == 1);
}

TEST_CASE("vote sets shrink as k grows") {
  std::mt19937_64 rng(71);
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<RiskDecision> decisions;
    size_t spans = 1 + rng() % 8;
    for (size_t s = 0; s < spans; ++s) {
      for (int i = 0; i < kNumIndicators; ++i) {
        if (rng() % 4 == 0) continue;  // this indicator skipped this span
        RiskDecision d;
        d.doc_id = "d" + std::to_string(rng() % 2);
        d.start = s * 10;
        d.end = s * 10 + 4;
        d.indicator = static_cast<IndicatorId>(i);
        d.risky = rng() % 2 == 0;
        decisions.push_back(d);
      }
    }
    CombineResult k1 = CombineDecisions(decisions, 1);
    CombineResult k2 = CombineDecisions(decisions, 2);
    CombineResult k3 = CombineDecisions(decisions, 3);
    for (const auto &span : k2.risky) CHECK(k1.risky.count(span) == 1);
    for (const auto &span : k3.risky) CHECK(k2.risky.count(span) == 1);
  }
}
