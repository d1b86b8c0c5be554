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

// Command line front end for the sanitization pipeline:
//
//   sanipipe build-gazetteer   harvest term lists from a knowledge base dump
//   sanipipe detect            find candidate spans (tagger + gazetteers)
//   sanipipe score             run risk indicators over detected spans
//   sanipipe tune              fit the perturbation threshold on gold data
//   sanipipe sanitize          apply the k-of-n vote and mask the text
//   sanipipe evaluate          score mask sets against gold annotations
//   sanipipe convert-tab       import a court-decision benchmark file
//
// Exit codes: 0 success, 1 runtime failure, 2 usage or configuration error.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <iostream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "sanipipe/corpus.h"
#include "sanipipe/eval.h"
#include "sanipipe/gazetteer.h"
#include "sanipipe/indicators.h"
#include "sanipipe/io.h"
#include "sanipipe/scorer.h"
#include "sanipipe/silver.h"
#include "sanipipe/text.h"
#include "sanipipe/websearch.h"

using nlohmann::json;
using namespace sanipipe;

// Language model shared by the subcommand that parsed; built in main from the
// scorer flags before dispatch so construction errors map to exit code 2.
static std::unique_ptr<Scorer> g_scorer;

namespace {

// Wrong invocation or configuration, as opposed to a failure while running.
class UsageError : public std::runtime_error {
 public:
  explicit UsageError(const std::string &msg) : std::runtime_error(msg) {}
};

// ---------------------------------------------------------------------------
// Configuration file support: a flat JSON object whose keys are long option
// names without the leading dashes. Explicit command line flags win.
// ---------------------------------------------------------------------------

json g_config = json::object();

void LoadConfigFile(const std::string &path) {
  if (!FileExists(path)) {
    throw UsageError("config file not found: " + path);
  }
  try {
    g_config = json::parse(ReadFile(path));
  } catch (const json::parse_error &e) {
    throw UsageError("config file " + path + ": " + e.what());
  }
  if (!g_config.is_object()) {
    throw UsageError("config file " + path + " must hold a JSON object");
  }
}

bool CliSet(const CLI::App &cmd, const std::string &flag) {
  const CLI::Option *opt = cmd.get_option_no_throw(flag);
  return opt != nullptr && opt->count() > 0;
}

template <typename T>
void ConfigOverride(const CLI::App &cmd, const std::string &flag,
                    const std::string &key, T *target) {
  if (CliSet(cmd, flag)) return;  // explicit flag wins
  if (!g_config.contains(key)) return;
  try {
    *target = g_config[key].get<T>();
  } catch (const json::exception &) {
    throw UsageError("config key \"" + key + "\" has the wrong type");
  }
}

void RequireFile(const std::string &path, const std::string &what) {
  if (path.empty()) throw UsageError(what + " path is required");
  if (!FileExists(path)) throw UsageError(what + " not found: " + path);
}

std::vector<std::string> SplitList(const std::string &csv) {
  std::vector<std::string> out;
  std::stringstream in(csv);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::vector<std::string> SplitSpaces(const std::string &command) {
  std::vector<std::string> out;
  std::stringstream in(command);
  std::string item;
  while (in >> item) out.push_back(item);
  return out;
}

// ---------------------------------------------------------------------------
// Scorer construction shared by score/tune/evaluate.
// ---------------------------------------------------------------------------

struct ScorerOptions {
  std::string kind = "ngram";  // ngram | external
  std::string ngram_model;     // load instead of training
  int ngram_order = 3;
  double ngram_add_k = 0.1;
  std::string command;         // external: child process argv
  std::string tcp;             // external: host:port
  int timeout_ms = 30000;

  void Register(CLI::App *cmd) {
    cmd->add_option("--scorer", kind, "language model: ngram or external");
    cmd->add_option("--ngram-model", ngram_model,
                    "trained n-gram model file (default: train on the corpus)");
    cmd->add_option("--ngram-order", ngram_order, "n-gram order");
    cmd->add_option("--ngram-add-k", ngram_add_k, "additive smoothing constant");
    cmd->add_option("--scorer-cmd", command,
                    "external scorer command line (spawned, line protocol)");
    cmd->add_option("--scorer-tcp", tcp, "external scorer host:port");
    cmd->add_option("--scorer-timeout-ms", timeout_ms,
                    "response timeout for the external scorer");
  }

  void FromConfig(const CLI::App &cmd) {
    ConfigOverride(cmd, "--scorer", "scorer", &kind);
    ConfigOverride(cmd, "--ngram-model", "ngram-model", &ngram_model);
    ConfigOverride(cmd, "--ngram-order", "ngram-order", &ngram_order);
    ConfigOverride(cmd, "--ngram-add-k", "ngram-add-k", &ngram_add_k);
    ConfigOverride(cmd, "--scorer-cmd", "scorer-cmd", &command);
    ConfigOverride(cmd, "--scorer-tcp", "scorer-tcp", &tcp);
    ConfigOverride(cmd, "--scorer-timeout-ms", "scorer-timeout-ms", &timeout_ms);
  }

  std::unique_ptr<Scorer> Build(const Corpus &corpus) const {
    if (kind == "ngram") {
      if (!ngram_model.empty()) {
        RequireFile(ngram_model, "n-gram model");
        return std::make_unique<NGramScorer>(NGramScorer::Load(ngram_model));
      }
      std::vector<std::string> texts;
      texts.reserve(corpus.size());
      for (const Document &doc : corpus) texts.push_back(doc.text);
      return std::make_unique<NGramScorer>(
          NGramScorer::Train(texts, ngram_order, ngram_add_k));
    }
    if (kind == "external") {
      if (!command.empty()) {
        return std::make_unique<ExternalScorer>(
            MakeProcessTransport(SplitSpaces(command)), timeout_ms);
      }
      if (!tcp.empty()) {
        size_t colon = tcp.rfind(':');
        if (colon == std::string::npos) {
          throw UsageError("--scorer-tcp expects host:port");
        }
        return std::make_unique<ExternalScorer>(
            MakeTcpTransport(tcp.substr(0, colon),
                             std::stoi(tcp.substr(colon + 1))),
            timeout_ms);
      }
      throw UsageError("external scorer needs --scorer-cmd or --scorer-tcp");
    }
    throw UsageError("unknown scorer kind \"" + kind + "\"");
  }
};

// ---------------------------------------------------------------------------
// Shared span plumbing.
// ---------------------------------------------------------------------------

// Token index range covered by a character span; nullopt when the span
// overlaps no token.
std::optional<std::pair<size_t, size_t>> SpanTokenRange(
    const std::vector<Token> &tokens, size_t start, size_t end) {
  size_t begin = tokens.size(), stop = 0;
  for (size_t t = 0; t < tokens.size(); ++t) {
    if (tokens[t].start < end && start < tokens[t].end) {
      begin = std::min(begin, t);
      stop = std::max(stop, t + 1);
    }
  }
  if (stop <= begin) return std::nullopt;
  return std::make_pair(begin, stop);
}

// Entity clusters for detected spans: spans with the same normalized surface
// form are assumed to mention the same entity, everything else stands alone.
DocSpans BuildDocSpans(const Document &doc,
                       const std::vector<PredictedSpan> &spans) {
  DocSpans out;
  std::map<std::string, int> cluster_of_surface;
  for (const PredictedSpan &span : spans) {
    std::string surface =
        NormalizeTerm(UTF8Substring(doc.text, span.start, span.end));
    auto [it, inserted] = cluster_of_surface.try_emplace(
        surface, static_cast<int>(out.cluster_ids.size()));
    if (inserted) out.cluster_ids.push_back(surface);
    out.spans.emplace_back(span.start, span.end);
    out.cluster_of.push_back(it->second);
  }
  return out;
}

void ValidateSpansAgainstCorpus(
    const Corpus &corpus,
    const std::map<std::string, std::vector<PredictedSpan>> &spans) {
  std::map<std::string, size_t> length_of;
  for (const Document &doc : corpus) {
    length_of[doc.doc_id] = UTF8Length(doc.text);
  }
  std::vector<std::string> unknown;
  for (const auto &[doc_id, doc_spans] : spans) {
    auto it = length_of.find(doc_id);
    if (it == length_of.end()) {
      unknown.push_back(doc_id);
      continue;
    }
    for (const PredictedSpan &span : doc_spans) {
      if (span.end > it->second) {
        throw UsageError("doc \"" + doc_id + "\": span [" +
                         std::to_string(span.start) + ", " +
                         std::to_string(span.end) + ") exceeds text length " +
                         std::to_string(it->second));
      }
    }
  }
  if (!unknown.empty()) {
    std::string list;
    for (const std::string &id : unknown) {
      if (!list.empty()) list += ", ";
      list += id;
    }
    throw UsageError("span file references unknown doc ids: " + list);
  }
}

// Runs fn(i) for i in [0, n) on up to workers threads. Exceptions are
// captured and rethrown on the caller thread.
void ParallelFor(size_t n, int workers, const std::function<void(size_t)> &fn) {
  if (workers <= 1 || n <= 1) {
    for (size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    while (true) {
      size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> threads;
  int count = std::min<int>(workers, static_cast<int>(n));
  threads.reserve(count);
  for (int i = 0; i < count; ++i) threads.emplace_back(worker);
  for (std::thread &t : threads) t.join();
  if (error) std::rethrow_exception(error);
}

// ---------------------------------------------------------------------------
// build-gazetteer
// ---------------------------------------------------------------------------

struct BuildGazetteerArgs {
  std::string dump, properties, countries, out_prefix;
  std::string lang = "en";
  bool include_aliases = false;
};

int RunBuildGazetteer(const BuildGazetteerArgs &args) {
  RequireFile(args.dump, "dump file");
  RequireFile(args.properties, "properties file");
  if (!args.countries.empty()) RequireFile(args.countries, "countries file");
  if (args.out_prefix.empty()) throw UsageError("--out prefix is required");

  std::vector<PropertySpec> specs = LoadPropertySpecs(args.properties);
  DumpExtraction extraction =
      ExtractDumpValues(args.dump, specs, args.lang, args.include_aliases);
  GazetteerBuild build = BuildGazetteers(extraction.values, specs);
  size_t manual = 0;
  if (!args.countries.empty()) {
    manual = AugmentFromTermFile(&build.dem, args.countries, "manual");
  }
  SaveGazetteer(build.dem, args.out_prefix + ".dem.tsv");
  SaveGazetteer(build.misc, args.out_prefix + ".misc.tsv");

  const StreamStats &s = extraction.stats;
  std::cout << "lines " << s.lines << ", entities " << s.entities
            << ", humans " << s.humans << ", malformed " << s.malformed
            << ", values " << s.values << ", unresolved " << s.unresolved
            << "\n";
  size_t dropped = 0;
  for (const auto &[reason, count] : build.dropped) dropped += count;
  std::cout << "DEM terms " << build.dem.size() << " (" << manual
            << " from the manual list), MISC terms " << build.misc.size()
            << ", dropped " << dropped << " degenerate values\n";
  std::cout << "wrote " << args.out_prefix << ".dem.tsv and "
            << args.out_prefix << ".misc.tsv\n";
  return 0;
}

// ---------------------------------------------------------------------------
// detect
// ---------------------------------------------------------------------------

struct DetectArgs {
  std::string corpus, ner, predictions, out, bio;
  std::vector<std::string> gazetteers;
};

int RunDetect(const DetectArgs &args) {
  RequireFile(args.corpus, "corpus");
  if (args.out.empty()) throw UsageError("--out path is required");
  bool passthrough = !args.predictions.empty();
  if (passthrough && (!args.ner.empty() || !args.gazetteers.empty())) {
    throw UsageError("--predictions cannot be combined with --ner/--gazetteer");
  }
  if (!passthrough && args.ner.empty() && args.gazetteers.empty()) {
    throw UsageError("need --ner and/or --gazetteer, or --predictions");
  }

  Corpus corpus = LoadCorpus(args.corpus);
  std::map<std::string, std::vector<PredictedSpan>> result;
  if (passthrough) {
    RequireFile(args.predictions, "predictions file");
    result = LoadPredictedSpans(args.predictions, SpanSource::MODEL);
    ValidateSpansAgainstCorpus(corpus, result);
    for (const Document &doc : corpus) result.try_emplace(doc.doc_id);
  } else {
    std::map<std::string, std::vector<PredictedSpan>> ner;
    if (!args.ner.empty()) {
      RequireFile(args.ner, "tagger span file");
      ner = LoadPredictedSpans(args.ner, SpanSource::NER);
    }
    std::vector<Gazetteer> loaded;
    for (const std::string &path : args.gazetteers) {
      RequireFile(path, "gazetteer");
      loaded.push_back(LoadGazetteer(path));
    }
    std::vector<const Gazetteer *> pointers;
    for (const Gazetteer &g : loaded) pointers.push_back(&g);
    std::string bio;
    SilverReport report =
        BuildSilverCorpus(corpus, ner, pointers, &bio, &result);
    if (!args.bio.empty()) WriteFile(args.bio, bio);
    std::cout << "documents " << report.documents << ", spans " << report.spans;
    for (const auto &[source, count] : report.spans_per_source) {
      std::cout << ", " << ToString(source) << " " << count;
    }
    std::cout << "\n";
  }
  for (const Document &doc : corpus) result.try_emplace(doc.doc_id);
  SavePredictedSpans(result, args.out);
  std::cout << "wrote " << args.out << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// score
// ---------------------------------------------------------------------------

struct ScoreArgs {
  std::string corpus, spans, out;
  std::string indicators = "prob,spancls,perturb,seqlab,websearch";
  // Classifier models.
  std::string train_corpus, prob_model, spancls_model;
  std::string save_model_prefix;
  double train_fraction = 1.0;
  double prob_threshold = 0.5;
  int train_iterations = 500;
  double train_lr = 0.5;
  double train_l2 = 1e-4;
  // Perturbation.
  double perturb_threshold = std::nan("");
  // Sequence labels.
  std::string seqlab;
  std::string seqlab_mode = "partial";
  // Web search.
  std::string web_fixture, web_cache;
  std::string web_variant = "hits";
  uint64_t web_lower = 100;
  uint64_t web_upper = 0;  // 0: no upper bound
  double web_rate = 1.0;
};

struct TrainRow {
  FeatureVector plain;
  FeatureVector with_text;
  bool label = false;
};

// Builds classifier training rows from a gold corpus: one row per (document,
// annotator, mention), labeled maskworthy unless the mention is NO_MASK.
std::vector<TrainRow> BuildTrainingRows(const Corpus &corpus,
                                        const Scorer &scorer) {
  std::vector<TrainRow> rows;
  for (const Document &doc : corpus) {
    std::vector<Token> tokens = Tokenize(doc.text);
    std::vector<std::string> surfaces;
    for (const Token &token : tokens) surfaces.push_back(token.surface);
    for (const auto &[annotator, ann] : doc.annotations) {
      for (const Mention &m : ann.mentions) {
        auto range = SpanTokenRange(tokens, m.start, m.end);
        if (!range) continue;
        TrainRow row;
        row.plain = ExtractSpanFeatures(scorer, surfaces, range->first,
                                        range->second, m.semantic_type, false);
        row.with_text = ExtractSpanFeatures(scorer, surfaces, range->first,
                                            range->second, m.semantic_type,
                                            true);
        row.label = m.identifier_kind != IdentifierKind::NO_MASK;
        rows.push_back(std::move(row));
      }
    }
  }
  return rows;
}

// Seeded subsample of training rows for learning-curve experiments.
std::vector<TrainRow> SampleRows(std::vector<TrainRow> rows, double fraction,
                                 uint64_t seed) {
  if (fraction >= 1.0) return rows;
  if (fraction <= 0.0) throw UsageError("--train-fraction must be in (0, 1]");
  size_t keep = static_cast<size_t>(
      std::ceil(fraction * static_cast<double>(rows.size())));
  if (keep == 0) throw UsageError("training sample is empty");
  std::vector<size_t> order(rows.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  order.resize(keep);
  std::sort(order.begin(), order.end());
  std::vector<TrainRow> sampled;
  sampled.reserve(keep);
  for (size_t i : order) sampled.push_back(std::move(rows[i]));
  return sampled;
}

int RunScore(const ScoreArgs &args, int workers, uint64_t seed) {
  RequireFile(args.corpus, "corpus");
  RequireFile(args.spans, "span file");
  if (args.out.empty()) throw UsageError("--out path is required");

  std::set<IndicatorId> active;
  for (const std::string &name : SplitList(args.indicators)) {
    std::string upper = name;
    for (char &c : upper) c = static_cast<char>(std::toupper(c));
    auto id = ParseIndicatorId(upper);
    if (!id) throw UsageError("unknown indicator \"" + name + "\"");
    active.insert(*id);
  }
  if (active.empty()) throw UsageError("no indicators selected");

  Corpus corpus = LoadCorpus(args.corpus);
  auto spans = LoadPredictedSpans(args.spans, SpanSource::MODEL);
  ValidateSpansAgainstCorpus(corpus, spans);

  const Scorer *scorer = g_scorer.get();
  bool needs_scorer = active.count(IndicatorId::PROB) != 0 ||
                      active.count(IndicatorId::SPANCLS) != 0 ||
                      active.count(IndicatorId::PERTURB) != 0;
  if (needs_scorer && scorer == nullptr) {
    throw UsageError("selected indicators need a scorer");
  }

  // Classifier models.
  LogRegModel prob_model, spancls_model;
  bool have_prob = false, have_spancls = false;
  if (!args.train_corpus.empty()) {
    RequireFile(args.train_corpus, "training corpus");
    Corpus train = LoadCorpus(args.train_corpus);
    std::vector<TrainRow> rows = BuildTrainingRows(train, *scorer);
    rows = SampleRows(std::move(rows), args.train_fraction, seed);
    std::cerr << "training on " << rows.size() << " spans\n";
    std::vector<bool> labels;
    for (const TrainRow &row : rows) labels.push_back(row.label);
    TrainOptions options;
    options.iterations = args.train_iterations;
    options.learning_rate = args.train_lr;
    options.l2 = args.train_l2;
    if (active.count(IndicatorId::PROB) != 0) {
      std::vector<FeatureVector> features;
      for (const TrainRow &row : rows) features.push_back(row.plain);
      options.with_text = false;
      prob_model = TrainLogReg(features, labels, options);
      have_prob = true;
    }
    if (active.count(IndicatorId::SPANCLS) != 0) {
      std::vector<FeatureVector> features;
      for (const TrainRow &row : rows) features.push_back(row.with_text);
      options.with_text = true;
      spancls_model = TrainLogReg(features, labels, options);
      have_spancls = true;
    }
    if ((have_prob && prob_model.single_class) ||
        (have_spancls && spancls_model.single_class)) {
      std::cerr << "warning: training labels are single-class; classifier "
                   "output is constant\n";
    }
    if (!args.save_model_prefix.empty()) {
      if (have_prob) prob_model.Save(args.save_model_prefix + ".prob.json");
      if (have_spancls) {
        spancls_model.Save(args.save_model_prefix + ".spancls.json");
      }
    }
  }
  if (!have_prob && active.count(IndicatorId::PROB) != 0) {
    RequireFile(args.prob_model, "probability model");
    prob_model = LogRegModel::Load(args.prob_model);
    have_prob = true;
  }
  if (!have_spancls && active.count(IndicatorId::SPANCLS) != 0) {
    RequireFile(args.spancls_model, "span classifier model");
    spancls_model = LogRegModel::Load(args.spancls_model);
    have_spancls = true;
  }

  if (active.count(IndicatorId::PERTURB) != 0 &&
      std::isnan(args.perturb_threshold)) {
    throw UsageError(
        "--perturb-threshold is required when the PERTURB indicator is "
        "active (fit one with the tune subcommand)");
  }

  std::map<std::string, std::vector<TokenLabel>> token_predictions;
  MatchMode seqlab_mode = MatchMode::PARTIAL;
  if (active.count(IndicatorId::SEQLAB) != 0) {
    RequireFile(args.seqlab, "token prediction file");
    token_predictions = LoadTokenPredictions(args.seqlab);
    if (args.seqlab_mode == "strict") {
      seqlab_mode = MatchMode::STRICT;
    } else if (args.seqlab_mode != "partial") {
      throw UsageError("--seqlab-mode must be strict or partial");
    }
  }

  std::unique_ptr<SearchClient> web;
  if (active.count(IndicatorId::WEBSEARCH) != 0) {
    if (!args.web_fixture.empty()) {
      RequireFile(args.web_fixture, "web fixture");
      web = SearchClient::Fixture(args.web_fixture);
    } else {
      web = SearchClient::LiveFromEnv(args.web_cache, args.web_rate);
    }
    if (args.web_variant != "hits" && args.web_variant != "url") {
      throw UsageError("--web-variant must be hits or url");
    }
  }

  // Per-document decision computation; documents are independent.
  std::vector<std::vector<RiskDecision>> per_doc(corpus.size());
  ParallelFor(corpus.size(), workers, [&](size_t d) {
    const Document &doc = corpus[d];
    auto it = spans.find(doc.doc_id);
    if (it == spans.end() || it->second.empty()) return;
    const std::vector<PredictedSpan> &doc_spans = it->second;

    std::vector<Token> tokens = Tokenize(doc.text);
    std::vector<std::string> surfaces;
    for (const Token &token : tokens) surfaces.push_back(token.surface);

    // Perturbation risk for the whole document at once.
    std::set<size_t> perturb_risky;
    std::map<size_t, double> perturb_score;
    if (active.count(IndicatorId::PERTURB) != 0) {
      DocSpans ds = BuildDocSpans(doc, doc_spans);
      std::vector<InfluenceRecord> records = AllInfluences(doc, ds, *scorer);
      perturb_risky = PerturbRiskySpans(records, ds, args.perturb_threshold);
      for (const InfluenceRecord &record : records) {
        for (size_t s = 0; s < ds.spans.size(); ++s) {
          if (ds.cluster_of[s] == record.perturbed_cluster) {
            auto [pit, inserted] = perturb_score.emplace(s, record.delta);
            if (!inserted) pit->second = std::max(pit->second, record.delta);
          }
        }
      }
    }

    std::set<size_t> seqlab_risky;
    if (active.count(IndicatorId::SEQLAB) != 0) {
      auto pit = token_predictions.find(doc.doc_id);
      if (pit != token_predictions.end()) {
        std::vector<std::pair<size_t, size_t>> ranges;
        for (const PredictedSpan &span : doc_spans) {
          ranges.emplace_back(span.start, span.end);
        }
        seqlab_risky = SeqLabRiskySpans(pit->second, tokens, ranges,
                                        seqlab_mode, doc.doc_id);
      }
    }

    std::set<std::string> person_urls;
    if (web != nullptr && args.web_variant == "url" && doc.target_name) {
      person_urls = web->PersonUrls(*doc.target_name);
    }

    for (size_t s = 0; s < doc_spans.size(); ++s) {
      const PredictedSpan &span = doc_spans[s];
      auto range = SpanTokenRange(tokens, span.start, span.end);
      if (range && active.count(IndicatorId::PROB) != 0) {
        FeatureVector features =
            ExtractSpanFeatures(*scorer, surfaces, range->first, range->second,
                                span.label, false);
        per_doc[d].push_back(ProbIndicator(prob_model, doc.doc_id, span.start,
                                           span.end, features,
                                           args.prob_threshold));
      }
      if (range && active.count(IndicatorId::SPANCLS) != 0) {
        FeatureVector features =
            ExtractSpanFeatures(*scorer, surfaces, range->first, range->second,
                                span.label, true);
        per_doc[d].push_back(SpanClsIndicator(spancls_model, doc.doc_id,
                                              span.start, span.end, features,
                                              args.prob_threshold));
      }
      if (range && active.count(IndicatorId::PERTURB) != 0) {
        RiskDecision decision;
        decision.doc_id = doc.doc_id;
        decision.start = span.start;
        decision.end = span.end;
        decision.indicator = IndicatorId::PERTURB;
        decision.risky = perturb_risky.count(s) != 0;
        auto score_it = perturb_score.find(s);
        decision.score = score_it != perturb_score.end() ? score_it->second : 0;
        per_doc[d].push_back(decision);
      }
      if (range && active.count(IndicatorId::SEQLAB) != 0 &&
          token_predictions.count(doc.doc_id) != 0) {
        RiskDecision decision;
        decision.doc_id = doc.doc_id;
        decision.start = span.start;
        decision.end = span.end;
        decision.indicator = IndicatorId::SEQLAB;
        decision.risky = seqlab_risky.count(s) != 0;
        decision.score = decision.risky ? 1 : 0;
        per_doc[d].push_back(decision);
      }
      if (web != nullptr) {
        std::string query = SpanQuery(doc.text, span.start, span.end);
        SearchResult result = web->Search(query);
        if (args.web_variant == "hits") {
          per_doc[d].push_back(WebHitsIndicator(
              doc.doc_id, span.start, span.end, result.total_hits,
              args.web_lower,
              args.web_upper == 0
                  ? std::nullopt
                  : std::optional<uint64_t>(args.web_upper)));
        } else {
          std::set<std::string> span_urls(result.urls.begin(),
                                          result.urls.end());
          per_doc[d].push_back(WebUrlIndicator(doc.doc_id, span.start,
                                               span.end, span_urls,
                                               person_urls));
        }
      }
    }
  });

  std::vector<RiskDecision> decisions;
  std::map<IndicatorId, std::pair<size_t, size_t>> tally;  // risky, total
  for (const auto &doc_decisions : per_doc) {
    for (const RiskDecision &d : doc_decisions) {
      auto &[risky, total] = tally[d.indicator];
      ++total;
      if (d.risky) ++risky;
      decisions.push_back(d);
    }
  }
  SaveRiskDecisions(decisions, args.out);
  for (const auto &[id, counts] : tally) {
    std::cout << ToString(id) << ": " << counts.first << "/" << counts.second
              << " risky\n";
  }
  std::cout << "wrote " << decisions.size() << " decisions to " << args.out
            << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// tune
// ---------------------------------------------------------------------------

struct TuneArgs {
  std::string corpus, spans, sweep_out;
};

int RunTune(const TuneArgs &args) {
  RequireFile(args.corpus, "corpus");
  RequireFile(args.spans, "span file");

  Corpus corpus = LoadCorpus(args.corpus);
  auto spans = LoadPredictedSpans(args.spans, SpanSource::MODEL);
  ValidateSpansAgainstCorpus(corpus, spans);

  if (g_scorer == nullptr) throw UsageError("tune needs a scorer");

  std::map<std::string, DocSpans> doc_spans;
  for (const Document &doc : corpus) {
    auto it = spans.find(doc.doc_id);
    if (it != spans.end()) {
      doc_spans.emplace(doc.doc_id, BuildDocSpans(doc, it->second));
    }
  }
  TuneResult result = TunePerturbThreshold(corpus, doc_spans, *g_scorer);
  if (!args.sweep_out.empty()) {
    WriteFile(args.sweep_out, SweepToCsv(result.sweep));
    std::cout << "wrote sweep to " << args.sweep_out << "\n";
  }
  if (result.degenerate) {
    std::cerr << "warning: no influence observations; threshold defaults to "
                 "+inf\n";
  }
  std::cout << "threshold " << result.threshold << "\n";
  std::cout << "objective " << result.objective << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// sanitize
// ---------------------------------------------------------------------------

struct SanitizeArgs {
  std::string corpus, spans, decisions, out_text, out_masks;
  int votes = 2;
  bool opaque = false;
};

int RunSanitize(const SanitizeArgs &args) {
  RequireFile(args.corpus, "corpus");
  RequireFile(args.spans, "span file");
  RequireFile(args.decisions, "decision file");
  if (args.out_text.empty() || args.out_masks.empty()) {
    throw UsageError("--out-text and --out-masks are required");
  }

  Corpus corpus = LoadCorpus(args.corpus);
  auto spans = LoadPredictedSpans(args.spans, SpanSource::MODEL);
  ValidateSpansAgainstCorpus(corpus, spans);
  std::vector<RiskDecision> decisions = LoadRiskDecisions(args.decisions);

  // Every decision must point at a known span.
  std::map<std::string, std::map<std::pair<size_t, size_t>, SemanticType>>
      span_index;
  for (const auto &[doc_id, doc_spans] : spans) {
    for (const PredictedSpan &span : doc_spans) {
      span_index[doc_id][{span.start, span.end}] = span.label;
    }
  }
  for (const RiskDecision &d : decisions) {
    auto doc_it = span_index.find(d.doc_id);
    if (doc_it == span_index.end() ||
        doc_it->second.count({d.start, d.end}) == 0) {
      throw UsageError("decision references unknown span [" +
                       std::to_string(d.start) + ", " + std::to_string(d.end) +
                       ") in doc \"" + d.doc_id + "\"");
    }
  }

  CombineResult combined = CombineDecisions(decisions, args.votes);
  if (combined.k_exceeds_indicators) {
    std::cerr << "warning: k=" << args.votes
              << " exceeds the number of indicators present; nothing can be "
                 "masked\n";
  }

  std::ostringstream text_out;
  std::map<std::string, MaskSet> masks;
  size_t masked_spans = 0;
  for (const Document &doc : corpus) {
    MaskSet set;
    set.doc_id = doc.doc_id;
    std::vector<std::pair<std::pair<size_t, size_t>, SemanticType>> risky;
    auto doc_it = span_index.find(doc.doc_id);
    if (doc_it != span_index.end()) {
      for (const auto &[range, label] : doc_it->second) {
        if (combined.risky.count({doc.doc_id, range.first, range.second}) !=
            0) {
          risky.push_back({range, label});
        }
      }
    }
    std::sort(risky.begin(), risky.end());
    std::u32string text = DecodeUTF8(doc.text);
    // Replace right to left so earlier offsets stay valid.
    for (auto it = risky.rbegin(); it != risky.rend(); ++it) {
      const auto &[range, label] = *it;
      std::string replacement =
          args.opaque ? "***" : "[" + std::string(ToString(label)) + "]";
      std::u32string rep32 = DecodeUTF8(replacement);
      text.replace(range.first, range.second - range.first, rep32);
      set.masks.emplace_back(range.first, range.second);
      ++masked_spans;
    }
    std::sort(set.masks.begin(), set.masks.end());
    json line = json::object();
    line["doc_id"] = doc.doc_id;
    line["text"] = EncodeUTF8(text);
    text_out << line.dump() << "\n";
    masks.emplace(doc.doc_id, std::move(set));
  }
  WriteFile(args.out_text, text_out.str());
  SaveMaskSets(masks, args.out_masks);
  std::cout << "masked " << masked_spans << " spans at k=" << args.votes
            << "\n";
  std::cout << "wrote " << args.out_text << " and " << args.out_masks << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// evaluate
// ---------------------------------------------------------------------------

struct EvaluateArgs {
  std::string corpus, out_csv, out_json;
  std::vector<std::string> mask_specs;  // name=path
  bool weighted = true;
};

int RunEvaluate(const EvaluateArgs &args) {
  RequireFile(args.corpus, "corpus");
  if (args.mask_specs.empty()) {
    throw UsageError("at least one --masks name=path is required");
  }
  Corpus corpus = LoadCorpus(args.corpus);
  const Scorer *scorer = args.weighted ? g_scorer.get() : nullptr;
  Evaluator evaluator(&corpus, scorer);

  std::vector<MetricsReport> reports;
  for (const std::string &spec : args.mask_specs) {
    size_t eq = spec.find('=');
    if (eq == std::string::npos || eq == 0 || eq + 1 >= spec.size()) {
      throw UsageError("--masks expects name=path, got \"" + spec + "\"");
    }
    std::string name = spec.substr(0, eq);
    std::string path = spec.substr(eq + 1);
    RequireFile(path, "mask set " + name);
    reports.push_back(evaluator.Evaluate(LoadMaskSets(path), name));
  }
  std::string csv = ReportsToCsv(reports);
  std::cout << csv;
  if (!args.out_csv.empty()) WriteFile(args.out_csv, csv);
  if (!args.out_json.empty()) WriteFile(args.out_json, ReportsToJson(reports));
  return 0;
}

// ---------------------------------------------------------------------------
// convert-tab
// ---------------------------------------------------------------------------

struct ConvertTabArgs {
  std::string in, out, split;
};

// Maps byte offsets to code point offsets. Built once per document.
class ByteToChar {
 public:
  explicit ByteToChar(const std::string &text) {
    size_t cp = 0;
    for (size_t i = 0; i < text.size();) {
      unsigned char b = static_cast<unsigned char>(text[i]);
      size_t len = b < 0x80 ? 1 : (b & 0xE0) == 0xC0 ? 2 : (b & 0xF0) == 0xE0 ? 3 : 4;
      starts_.push_back(i);
      chars_.push_back(cp++);
      i += len;
    }
    starts_.push_back(text.size());
    chars_.push_back(cp);
  }

  // Floor for starts, ceiling for ends.
  size_t Floor(size_t byte) const {
    auto it = std::upper_bound(starts_.begin(), starts_.end(), byte);
    return chars_[it - starts_.begin() - 1];
  }
  size_t Ceil(size_t byte) const {
    auto it = std::lower_bound(starts_.begin(), starts_.end(), byte);
    return chars_[it - starts_.begin()];
  }

 private:
  std::vector<size_t> starts_;
  std::vector<size_t> chars_;
};

int RunConvertTab(const ConvertTabArgs &args) {
  RequireFile(args.in, "input file");
  if (args.out.empty()) throw UsageError("--out path is required");

  json root;
  try {
    root = json::parse(ReadFile(args.in));
  } catch (const json::parse_error &e) {
    throw std::runtime_error(args.in + ": invalid JSON: " + std::string(e.what()));
  }
  if (!root.is_array()) {
    throw std::runtime_error(args.in + ": expected a JSON array of documents");
  }

  Corpus corpus;
  size_t skipped_split = 0, byte_docs = 0, dropped_overlaps = 0,
         dropped_bad = 0;
  for (const json &d : root) {
    if (!d.is_object() || !d.contains("doc_id") || !d.contains("text") ||
        !d.contains("annotations")) {
      throw std::runtime_error(args.in + ": document without doc_id/text/annotations");
    }
    if (!args.split.empty()) {
      if (d.value("dataset_type", "") != args.split) {
        ++skipped_split;
        continue;
      }
    }
    Document doc;
    doc.doc_id = d["doc_id"].get<std::string>();
    doc.text = d["text"].get<std::string>();
    size_t char_length = UTF8Length(doc.text);
    ByteToChar mapping(doc.text);

    const json &annotations = d["annotations"];
    if (!annotations.is_object()) {
      throw std::runtime_error(args.in + ": annotations must be an object in doc " +
                               doc.doc_id);
    }

    // Decide byte vs code point offsets for the whole document by testing
    // which interpretation reproduces more recorded span texts.
    size_t char_votes = 0, byte_votes = 0;
    bool out_of_char_range = false;
    for (auto it = annotations.begin(); it != annotations.end(); ++it) {
      const json &mentions = it.value().is_object()
                                 ? it.value().value("entity_mentions", json::array())
                                 : it.value();
      if (!mentions.is_array()) continue;
      for (const json &m : mentions) {
        if (!m.is_object()) continue;
        int64_t start = m.value("start_offset", int64_t{-1});
        int64_t end = m.value("end_offset", int64_t{-1});
        if (start < 0 || end <= start) continue;
        if (static_cast<size_t>(end) > char_length) out_of_char_range = true;
        if (!m.contains("span_text") || !m["span_text"].is_string()) continue;
        std::string span_text = m["span_text"].get<std::string>();
        if (static_cast<size_t>(end) <= char_length &&
            UTF8Substring(doc.text, start, end) == span_text) {
          ++char_votes;
        }
        if (static_cast<size_t>(end) <= doc.text.size() &&
            doc.text.substr(start, end - start) == span_text) {
          ++byte_votes;
        }
      }
    }
    bool use_bytes = byte_votes > char_votes || out_of_char_range;
    if (use_bytes) ++byte_docs;

    for (auto it = annotations.begin(); it != annotations.end(); ++it) {
      const json &mentions = it.value().is_object()
                                 ? it.value().value("entity_mentions", json::array())
                                 : it.value();
      if (!mentions.is_array()) continue;
      std::vector<Mention> converted;
      for (const json &m : mentions) {
        if (!m.is_object()) {
          ++dropped_bad;
          continue;
        }
        int64_t start = m.value("start_offset", int64_t{-1});
        int64_t end = m.value("end_offset", int64_t{-1});
        std::string type_name = m.value("entity_type", "");
        std::string kind_name = m.value("identifier_type", "");
        if (start < 0 || end <= start || type_name.empty() ||
            kind_name.empty()) {
          ++dropped_bad;
          continue;
        }
        Mention mention;
        if (use_bytes) {
          mention.start = mapping.Floor(static_cast<size_t>(start));
          mention.end = mapping.Ceil(static_cast<size_t>(end));
        } else {
          mention.start = static_cast<size_t>(start);
          mention.end = static_cast<size_t>(end);
        }
        if (mention.end > char_length || mention.start >= mention.end) {
          ++dropped_bad;
          continue;
        }
        auto type = ParseSemanticType(type_name);
        auto kind = ParseIdentifierKind(kind_name);
        if (!type || !kind) {
          ++dropped_bad;
          continue;
        }
        mention.semantic_type = *type;
        mention.identifier_kind = *kind;
        std::string conf = m.value("confidential_status", "NOT_CONFIDENTIAL");
        mention.confidential = conf != "NOT_CONFIDENTIAL";
        mention.entity_id = m.value("entity_id", "");
        if (mention.entity_id.empty()) {
          mention.entity_id = m.value("entity_mention_id", "");
        }
        if (mention.entity_id.empty()) {
          ++dropped_bad;
          continue;
        }
        converted.push_back(std::move(mention));
      }
      // Annotators occasionally nest mentions; keep the longer span, first
      // one on ties.
      std::vector<size_t> order(converted.size());
      for (size_t i = 0; i < order.size(); ++i) order[i] = i;
      std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        size_t len_a = converted[a].end - converted[a].start;
        size_t len_b = converted[b].end - converted[b].start;
        if (len_a != len_b) return len_a > len_b;
        return a < b;
      });
      std::vector<Mention> kept;
      for (size_t i : order) {
        bool clash = false;
        for (const Mention &k : kept) {
          if (converted[i].start < k.end && k.start < converted[i].end) {
            clash = true;
            break;
          }
        }
        if (clash) {
          ++dropped_overlaps;
        } else {
          kept.push_back(converted[i]);
        }
      }
      std::sort(kept.begin(), kept.end(),
                [](const Mention &a, const Mention &b) {
                  return std::tie(a.start, a.end) < std::tie(b.start, b.end);
                });
      AnnotationSet set;
      set.mentions = std::move(kept);
      doc.annotations.emplace(it.key(), std::move(set));
    }
    corpus.push_back(std::move(doc));
  }

  SaveCorpus(corpus, args.out);
  std::cout << "converted " << corpus.size() << " documents";
  if (!args.split.empty()) {
    std::cout << " (split " << args.split << ", skipped " << skipped_split
              << ")";
  }
  std::cout << "\n";
  std::cout << "byte-offset documents: " << byte_docs
            << ", dropped overlapping mentions: " << dropped_overlaps
            << ", dropped malformed mentions: " << dropped_bad << "\n";
  std::cout << "wrote " << args.out << "\n";

  // Round trip through the strict loader so downstream stages can rely on it.
  Corpus reloaded = LoadCorpus(args.out);
  std::cout << FormatCorpusStats(ComputeCorpusStats(reloaded));
  return 0;
}

}  // namespace

int main(int argc, char **argv) {
  CLI::App app{"text sanitization pipeline"};
  app.require_subcommand(1);

  std::string config_path;
  int workers = 1;
  uint64_t seed = 1;
  app.add_option("--config", config_path,
                 "flat JSON config file; explicit flags win");
  app.add_option("--workers", workers, "worker threads for per-document work");
  app.add_option("--seed", seed, "random seed for sampling");

  BuildGazetteerArgs bg;
  CLI::App *bg_cmd =
      app.add_subcommand("build-gazetteer", "harvest term lists from a dump");
  bg_cmd->add_option("--dump", bg.dump, "entity dump (JSON lines, gzip ok)");
  bg_cmd->add_option("--properties", bg.properties, "property table TSV");
  bg_cmd->add_option("--countries", bg.countries,
                     "extra demonym terms, one per line");
  bg_cmd->add_option("--out", bg.out_prefix, "output prefix");
  bg_cmd->add_option("--lang", bg.lang, "label language");
  bg_cmd->add_flag("--include-aliases", bg.include_aliases,
                   "harvest alternative labels of property values too");

  DetectArgs detect;
  CLI::App *detect_cmd =
      app.add_subcommand("detect", "find candidate spans in a corpus");
  detect_cmd->add_option("--corpus", detect.corpus, "corpus JSON");
  detect_cmd->add_option("--ner", detect.ner, "tagger spans JSONL");
  detect_cmd->add_option("--gazetteer", detect.gazetteers,
                         "gazetteer TSV (repeatable)");
  detect_cmd->add_option("--predictions", detect.predictions,
                         "pass through existing spans instead of detecting");
  detect_cmd->add_option("--out", detect.out, "output spans JSONL");
  detect_cmd->add_option("--bio", detect.bio,
                         "also write token/BIO-tag training data here");

  ScoreArgs score;
  ScorerOptions score_scorer;
  CLI::App *score_cmd =
      app.add_subcommand("score", "run risk indicators over detected spans");
  score_cmd->add_option("--corpus", score.corpus, "corpus JSON");
  score_cmd->add_option("--spans", score.spans, "detected spans JSONL");
  score_cmd->add_option("--out", score.out, "output decisions JSONL");
  score_cmd->add_option("--indicators", score.indicators,
                        "comma list: prob,spancls,perturb,seqlab,websearch");
  score_cmd->add_option("--train-corpus", score.train_corpus,
                        "gold corpus to fit the classifier indicators on");
  score_cmd->add_option("--train-fraction", score.train_fraction,
                        "seeded fraction of training spans to use");
  score_cmd->add_option("--train-iterations", score.train_iterations,
                        "gradient descent iterations");
  score_cmd->add_option("--train-lr", score.train_lr, "learning rate");
  score_cmd->add_option("--train-l2", score.train_l2, "L2 strength");
  score_cmd->add_option("--prob-model", score.prob_model,
                        "trained probability model JSON");
  score_cmd->add_option("--spancls-model", score.spancls_model,
                        "trained span classifier model JSON");
  score_cmd->add_option("--save-model-prefix", score.save_model_prefix,
                        "save freshly trained models under this prefix");
  score_cmd->add_option("--prob-threshold", score.prob_threshold,
                        "probability above which a span is risky");
  score_cmd->add_option("--perturb-threshold", score.perturb_threshold,
                        "influence delta above which a cluster is risky");
  score_cmd->add_option("--seqlab", score.seqlab,
                        "token predictions JSONL for the SEQLAB indicator");
  score_cmd->add_option("--seqlab-mode", score.seqlab_mode,
                        "strict (all tokens) or partial (any token)");
  score_cmd->add_option("--web-fixture", score.web_fixture,
                        "recorded search results (hermetic mode)");
  score_cmd->add_option("--web-cache", score.web_cache,
                        "JSONL cache file for live search");
  score_cmd->add_option("--web-variant", score.web_variant,
                        "hits (count threshold) or url (overlap with person)");
  score_cmd->add_option("--web-lower", score.web_lower,
                        "inclusive lower bound on hit count");
  score_cmd->add_option("--web-upper", score.web_upper,
                        "inclusive upper bound on hit count (0: none)");
  score_cmd->add_option("--web-rate", score.web_rate,
                        "max live queries per second");
  score_scorer.Register(score_cmd);

  TuneArgs tune;
  ScorerOptions tune_scorer;
  CLI::App *tune_cmd = app.add_subcommand(
      "tune", "fit the perturbation threshold on annotated data");
  tune_cmd->add_option("--corpus", tune.corpus, "gold corpus JSON");
  tune_cmd->add_option("--spans", tune.spans, "detected spans JSONL");
  tune_cmd->add_option("--sweep-out", tune.sweep_out,
                       "write the threshold sweep CSV here");
  tune_scorer.Register(tune_cmd);

  SanitizeArgs sanitize;
  CLI::App *sanitize_cmd =
      app.add_subcommand("sanitize", "apply the vote and mask the text");
  sanitize_cmd->add_option("--corpus", sanitize.corpus, "corpus JSON");
  sanitize_cmd->add_option("--spans", sanitize.spans, "detected spans JSONL");
  sanitize_cmd->add_option("--decisions", sanitize.decisions,
                           "risk decisions JSONL");
  sanitize_cmd->add_option("-k,--votes", sanitize.votes,
                           "risky votes needed to mask a span");
  sanitize_cmd->add_option("--out-text", sanitize.out_text,
                           "sanitized text JSONL");
  sanitize_cmd->add_option("--out-masks", sanitize.out_masks,
                           "mask set JSONL");
  sanitize_cmd->add_flag("--opaque", sanitize.opaque,
                         "replace with *** instead of the type placeholder");

  EvaluateArgs evaluate;
  ScorerOptions evaluate_scorer;
  CLI::App *evaluate_cmd =
      app.add_subcommand("evaluate", "score mask sets against gold data");
  evaluate_cmd->add_option("--corpus", evaluate.corpus, "gold corpus JSON");
  evaluate_cmd->add_option("--masks", evaluate.mask_specs,
                           "name=path of a mask set JSONL (repeatable)");
  evaluate_cmd->add_option("--out-csv", evaluate.out_csv, "report CSV path");
  evaluate_cmd->add_option("--out-json", evaluate.out_json,
                           "full report JSON path");
  evaluate_cmd->add_flag("!--no-weighted", evaluate.weighted,
                         "skip the scorer-weighted precision column");
  evaluate_scorer.Register(evaluate_cmd);

  ConvertTabArgs convert;
  CLI::App *convert_cmd = app.add_subcommand(
      "convert-tab", "import a court-decision benchmark JSON file");
  convert_cmd->add_option("--in", convert.in, "benchmark JSON");
  convert_cmd->add_option("--out", convert.out, "corpus JSON");
  convert_cmd->add_option("--split", convert.split,
                          "keep only documents of this dataset_type");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (!config_path.empty()) LoadConfigFile(config_path);
    ConfigOverride(app, "--workers", "workers", &workers);
    ConfigOverride(app, "--seed", "seed", &seed);

    if (bg_cmd->parsed()) {
      ConfigOverride(*bg_cmd, "--dump", "dump", &bg.dump);
      ConfigOverride(*bg_cmd, "--properties", "properties", &bg.properties);
      ConfigOverride(*bg_cmd, "--countries", "countries", &bg.countries);
      ConfigOverride(*bg_cmd, "--out", "out", &bg.out_prefix);
      ConfigOverride(*bg_cmd, "--lang", "lang", &bg.lang);
      return RunBuildGazetteer(bg);
    }
    if (detect_cmd->parsed()) {
      ConfigOverride(*detect_cmd, "--corpus", "corpus", &detect.corpus);
      ConfigOverride(*detect_cmd, "--ner", "ner", &detect.ner);
      ConfigOverride(*detect_cmd, "--out", "out", &detect.out);
      return RunDetect(detect);
    }
    if (score_cmd->parsed()) {
      ConfigOverride(*score_cmd, "--corpus", "corpus", &score.corpus);
      ConfigOverride(*score_cmd, "--spans", "spans", &score.spans);
      ConfigOverride(*score_cmd, "--out", "out", &score.out);
      ConfigOverride(*score_cmd, "--indicators", "indicators",
                     &score.indicators);
      ConfigOverride(*score_cmd, "--train-corpus", "train-corpus",
                     &score.train_corpus);
      ConfigOverride(*score_cmd, "--train-fraction", "train-fraction",
                     &score.train_fraction);
      ConfigOverride(*score_cmd, "--prob-model", "prob-model",
                     &score.prob_model);
      ConfigOverride(*score_cmd, "--spancls-model", "spancls-model",
                     &score.spancls_model);
      ConfigOverride(*score_cmd, "--prob-threshold", "prob-threshold",
                     &score.prob_threshold);
      ConfigOverride(*score_cmd, "--perturb-threshold", "perturb-threshold",
                     &score.perturb_threshold);
      ConfigOverride(*score_cmd, "--seqlab", "seqlab", &score.seqlab);
      ConfigOverride(*score_cmd, "--seqlab-mode", "seqlab-mode",
                     &score.seqlab_mode);
      ConfigOverride(*score_cmd, "--web-fixture", "web-fixture",
                     &score.web_fixture);
      ConfigOverride(*score_cmd, "--web-cache", "web-cache", &score.web_cache);
      ConfigOverride(*score_cmd, "--web-variant", "web-variant",
                     &score.web_variant);
      ConfigOverride(*score_cmd, "--web-lower", "web-lower", &score.web_lower);
      ConfigOverride(*score_cmd, "--web-upper", "web-upper", &score.web_upper);
      ConfigOverride(*score_cmd, "--web-rate", "web-rate", &score.web_rate);
      score_scorer.FromConfig(*score_cmd);

      RequireFile(score.corpus, "corpus");
      bool needs_scorer = score.indicators.find("prob") != std::string::npos ||
                          score.indicators.find("spancls") != std::string::npos ||
                          score.indicators.find("perturb") != std::string::npos;
      if (needs_scorer) {
        g_scorer = score_scorer.Build(LoadCorpus(score.corpus));
      }
      return RunScore(score, workers, seed);
    }
    if (tune_cmd->parsed()) {
      ConfigOverride(*tune_cmd, "--corpus", "corpus", &tune.corpus);
      ConfigOverride(*tune_cmd, "--spans", "spans", &tune.spans);
      ConfigOverride(*tune_cmd, "--sweep-out", "sweep-out", &tune.sweep_out);
      tune_scorer.FromConfig(*tune_cmd);
      RequireFile(tune.corpus, "corpus");
      g_scorer = tune_scorer.Build(LoadCorpus(tune.corpus));
      return RunTune(tune);
    }
    if (sanitize_cmd->parsed()) {
      ConfigOverride(*sanitize_cmd, "--corpus", "corpus", &sanitize.corpus);
      ConfigOverride(*sanitize_cmd, "--spans", "spans", &sanitize.spans);
      ConfigOverride(*sanitize_cmd, "--decisions", "decisions",
                     &sanitize.decisions);
      ConfigOverride(*sanitize_cmd, "--votes", "votes", &sanitize.votes);
      return RunSanitize(sanitize);
    }
    if (evaluate_cmd->parsed()) {
      ConfigOverride(*evaluate_cmd, "--corpus", "corpus", &evaluate.corpus);
      ConfigOverride(*evaluate_cmd, "--out-csv", "out-csv", &evaluate.out_csv);
      ConfigOverride(*evaluate_cmd, "--out-json", "out-json",
                     &evaluate.out_json);
      evaluate_scorer.FromConfig(*evaluate_cmd);
      RequireFile(evaluate.corpus, "corpus");
      if (evaluate.weighted) {
        g_scorer = evaluate_scorer.Build(LoadCorpus(evaluate.corpus));
      }
      return RunEvaluate(evaluate);
    }
    if (convert_cmd->parsed()) {
      ConfigOverride(*convert_cmd, "--in", "in", &convert.in);
      ConfigOverride(*convert_cmd, "--out", "out", &convert.out);
      ConfigOverride(*convert_cmd, "--split", "split", &convert.split);
      return RunConvertTab(convert);
    }
  } catch (const UsageError &e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
