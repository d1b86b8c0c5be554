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

#include "sanipipe/eval.h"

#include <algorithm>
#include <cstdio>
#include <set>
#include <sstream>

#include "json.hpp"

#include "sanipipe/io.h"

namespace sanipipe {

using nlohmann::json;

namespace {

bool Overlaps(size_t a_start, size_t a_end, size_t b_start, size_t b_end) {
  return a_start < b_end && b_start < a_end;
}

// True when [start, end) is fully covered by the union of the sorted,
// non-overlapping mask ranges.
bool FullyCovered(size_t start, size_t end,
                  const std::vector<std::pair<size_t, size_t>> &masks) {
  size_t need = start;
  for (const auto &[m_start, m_end] : masks) {
    if (m_end <= need) continue;
    if (m_start > need) return false;
    need = m_end;
    if (need >= end) return true;
  }
  return need >= end;
}

double SafeRatio(double num, double den, bool *degenerate) {
  if (den == 0) {
    // Nothing to get wrong: perfect by convention, flagged for transparency.
    if (degenerate != nullptr) *degenerate = true;
    return 1.0;
  }
  return num / den;
}

double F1Of(double p, double r) {
  if (p + r == 0) return 0.0;
  return 2.0 * p * r / (p + r);
}

void FillPrf(PrfRow *row) {
  row->precision = row->tp + row->fp == 0
                       ? 1.0
                       : static_cast<double>(row->tp) / (row->tp + row->fp);
  row->recall = row->tp + row->fn == 0
                    ? 1.0
                    : static_cast<double>(row->tp) / (row->tp + row->fn);
  row->f1 = F1Of(row->precision, row->recall);
}

}  // namespace

std::map<std::string, MaskSet> LoadMaskSets(const std::string &path) {
  LineReader reader(path);
  std::map<std::string, MaskSet> out;
  std::string line;
  while (reader.ReadLine(&line)) {
    if (line.empty()) continue;
    const std::string where = path + ":" + std::to_string(reader.line_number());
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::parse_error &e) {
      throw EvalError(where + ": invalid JSON: " + e.what());
    }
    if (!obj.is_object() || !obj.contains("doc_id") ||
        !obj["doc_id"].is_string() || !obj.contains("masks") ||
        !obj["masks"].is_array()) {
      throw EvalError(where + ": expected {\"doc_id\", \"masks\"}");
    }
    MaskSet set;
    set.doc_id = obj["doc_id"].get<std::string>();
    for (const json &m : obj["masks"]) {
      if (!m.is_array() || m.size() != 2 || !m[0].is_number_integer() ||
          !m[1].is_number_integer()) {
        throw EvalError(where + ": each mask must be a [start, end] pair");
      }
      int64_t start = m[0].get<int64_t>();
      int64_t end = m[1].get<int64_t>();
      if (start < 0 || end <= start) {
        throw EvalError(where + ": empty or inverted mask range");
      }
      set.masks.emplace_back(static_cast<size_t>(start),
                             static_cast<size_t>(end));
    }
    std::sort(set.masks.begin(), set.masks.end());
    for (size_t i = 1; i < set.masks.size(); ++i) {
      if (set.masks[i].first < set.masks[i - 1].second) {
        throw EvalError(where + ": overlapping masks in doc \"" + set.doc_id +
                        "\"");
      }
    }
    if (out.count(set.doc_id) != 0) {
      throw EvalError(where + ": duplicate doc_id \"" + set.doc_id + "\"");
    }
    out.emplace(set.doc_id, std::move(set));
  }
  return out;
}

void SaveMaskSets(const std::map<std::string, MaskSet> &masks,
                  const std::string &path) {
  std::ostringstream out;
  for (const auto &[doc_id, set] : masks) {
    json obj = json::object();
    obj["doc_id"] = doc_id;
    json arr = json::array();
    for (const auto &[start, end] : set.masks) {
      arr.push_back(json::array({start, end}));
    }
    obj["masks"] = std::move(arr);
    out << obj.dump() << "\n";
  }
  WriteFile(path, out.str());
}

Evaluator::Evaluator(const Corpus *corpus, const Scorer *scorer)
    : corpus_(corpus), scorer_(scorer) {}

namespace {

// Checks mask completeness and bounds once per evaluation.
void ValidateMasks(const Corpus &corpus,
                   const std::map<std::string, MaskSet> &masks) {
  std::set<std::string> known;
  std::vector<std::string> missing;
  for (const Document &doc : corpus) {
    known.insert(doc.doc_id);
    if (masks.count(doc.doc_id) == 0) missing.push_back(doc.doc_id);
  }
  if (!missing.empty()) {
    std::string list;
    for (const std::string &id : missing) {
      if (!list.empty()) list += ", ";
      list += id;
    }
    throw EvalError("no mask set for documents: " + list);
  }
  for (const auto &[doc_id, set] : masks) {
    if (known.count(doc_id) == 0) {
      throw EvalError("mask set for unknown doc_id \"" + doc_id + "\"");
    }
  }
  for (const Document &doc : corpus) {
    const MaskSet &set = masks.at(doc.doc_id);
    size_t length = UTF8Length(doc.text);
    for (const auto &[start, end] : set.masks) {
      if (end > length) {
        throw EvalError("doc \"" + doc.doc_id + "\": mask [" +
                        std::to_string(start) + ", " + std::to_string(end) +
                        ") exceeds text length " + std::to_string(length));
      }
    }
  }
}

}  // namespace

TokenPrf Evaluator::TokenScores(const std::map<std::string, MaskSet> &masks) const {
  ValidateMasks(*corpus_, masks);
  TokenPrf out;
  for (const Document &doc : *corpus_) {
    const MaskSet &set = masks.at(doc.doc_id);
    std::vector<Token> tokens = Tokenize(doc.text);
    std::vector<bool> sys(tokens.size(), false);
    for (size_t t = 0; t < tokens.size(); ++t) {
      for (const auto &[start, end] : set.masks) {
        if (Overlaps(tokens[t].start, tokens[t].end, start, end)) {
          sys[t] = true;
          break;
        }
      }
    }
    for (const auto &[annotator, ann] : doc.annotations) {
      for (size_t t = 0; t < tokens.size(); ++t) {
        bool gold = false;
        for (const Mention &m : ann.mentions) {
          if (m.identifier_kind == IdentifierKind::NO_MASK) continue;
          if (Overlaps(tokens[t].start, tokens[t].end, m.start, m.end)) {
            gold = true;
            break;
          }
        }
        if (sys[t] && gold) ++out.tp;
        else if (sys[t] && !gold) ++out.fp;
        else if (!sys[t] && gold) ++out.fn;
      }
    }
  }
  out.precision = SafeRatio(static_cast<double>(out.tp),
                            static_cast<double>(out.tp + out.fp),
                            &out.precision_degenerate);
  out.recall = SafeRatio(static_cast<double>(out.tp),
                         static_cast<double>(out.tp + out.fn),
                         &out.recall_degenerate);
  out.f1 = F1Of(out.precision, out.recall);
  return out;
}

double EntityRecall(const Corpus &corpus,
                    const std::map<std::string, MaskSet> &masks,
                    IdentifierKind kind_filter, uint64_t *total,
                    uint64_t *covered) {
  uint64_t n = 0, ok = 0;
  for (const Document &doc : corpus) {
    auto it = masks.find(doc.doc_id);
    if (it == masks.end()) {
      throw EvalError("no mask set for document \"" + doc.doc_id + "\"");
    }
    const MaskSet &set = it->second;
    for (const auto &[annotator, ann] : doc.annotations) {
      for (const EntityCluster &cluster : ExtractClusters(ann)) {
        bool wanted = kind_filter == IdentifierKind::NO_MASK
                          ? cluster.kind != IdentifierKind::NO_MASK
                          : cluster.kind == kind_filter;
        if (!wanted) continue;
        ++n;
        bool is_protected = true;
        for (size_t mi : cluster.mention_indices) {
          const Mention &m = ann.mentions[mi];
          if (!FullyCovered(m.start, m.end, set.masks)) {
            is_protected = false;
            break;
          }
        }
        if (is_protected) ++ok;
      }
    }
  }
  if (total != nullptr) *total = n;
  if (covered != nullptr) *covered = ok;
  bool degenerate = false;
  return SafeRatio(static_cast<double>(ok), static_cast<double>(n), &degenerate);
}

MetricsReport Evaluator::Evaluate(const std::map<std::string, MaskSet> &masks,
                                  const std::string &config) const {
  ValidateMasks(*corpus_, masks);
  MetricsReport report;
  report.config = config;
  report.scorer_name = scorer_ != nullptr ? scorer_->name() : "";

  double weighted_tp = 0, weighted_sys = 0;
  for (const Document &doc : *corpus_) {
    const MaskSet &set = masks.at(doc.doc_id);
    std::vector<Token> tokens = Tokenize(doc.text);
    std::vector<std::string> surfaces;
    surfaces.reserve(tokens.size());
    for (const Token &token : tokens) surfaces.push_back(token.surface);

    std::vector<bool> sys(tokens.size(), false);
    for (size_t t = 0; t < tokens.size(); ++t) {
      for (const auto &[start, end] : set.masks) {
        if (Overlaps(tokens[t].start, tokens[t].end, start, end)) {
          sys[t] = true;
          break;
        }
      }
    }

    // Information content per token, computed once per document and reused by
    // every annotator view.
    std::vector<double> weight(tokens.size(), 0.0);
    if (scorer_ != nullptr) {
      for (size_t t = 0; t < tokens.size(); ++t) {
        if (sys[t]) weight[t] = TokenInformationContent(*scorer_, surfaces, t);
      }
    }

    for (const auto &[annotator, ann] : doc.annotations) {
      std::vector<bool> gold(tokens.size(), false);
      for (const Mention &m : ann.mentions) {
        if (m.identifier_kind == IdentifierKind::NO_MASK) continue;
        for (size_t t = 0; t < tokens.size(); ++t) {
          if (Overlaps(tokens[t].start, tokens[t].end, m.start, m.end)) {
            gold[t] = true;
          }
        }
      }
      for (size_t t = 0; t < tokens.size(); ++t) {
        if (sys[t] && gold[t]) ++report.tp;
        else if (sys[t] && !gold[t]) ++report.fp;
        else if (!sys[t] && gold[t]) ++report.fn;
        if (sys[t] && scorer_ != nullptr) {
          weighted_sys += weight[t];
          if (gold[t]) weighted_tp += weight[t];
        }
      }

      for (const EntityCluster &cluster : ExtractClusters(ann)) {
        if (cluster.kind == IdentifierKind::NO_MASK) continue;
        bool is_protected = true;
        for (size_t mi : cluster.mention_indices) {
          const Mention &m = ann.mentions[mi];
          if (!FullyCovered(m.start, m.end, set.masks)) {
            is_protected = false;
            break;
          }
        }
        ++report.entities;
        if (is_protected) ++report.entities_protected;
        if (cluster.kind == IdentifierKind::DIRECT) {
          ++report.direct;
          if (is_protected) ++report.direct_protected;
        } else {
          ++report.quasi;
          if (is_protected) ++report.quasi_protected;
        }
      }
    }
  }

  report.precision = SafeRatio(static_cast<double>(report.tp),
                               static_cast<double>(report.tp + report.fp),
                               &report.precision_degenerate);
  report.recall_all = SafeRatio(static_cast<double>(report.tp),
                                static_cast<double>(report.tp + report.fn),
                                &report.recall_degenerate);
  report.f1 = F1Of(report.precision, report.recall_all);
  if (scorer_ != nullptr) {
    report.weighted_tp = weighted_tp;
    report.weighted_sys = weighted_sys;
    report.weighted_precision = SafeRatio(
        weighted_tp, weighted_sys, &report.weighted_precision_degenerate);
  } else {
    // Without a scorer every token weighs the same.
    report.weighted_tp = static_cast<double>(report.tp);
    report.weighted_sys = static_cast<double>(report.tp + report.fp);
    report.weighted_precision = report.precision;
    report.weighted_precision_degenerate = report.precision_degenerate;
  }
  report.recall_entity =
      SafeRatio(static_cast<double>(report.entities_protected),
                static_cast<double>(report.entities), &report.entity_degenerate);
  report.recall_direct =
      SafeRatio(static_cast<double>(report.direct_protected),
                static_cast<double>(report.direct), &report.direct_degenerate);
  report.recall_quasi =
      SafeRatio(static_cast<double>(report.quasi_protected),
                static_cast<double>(report.quasi), &report.quasi_degenerate);
  return report;
}

std::string ReportsToCsv(const std::vector<MetricsReport> &reports) {
  std::ostringstream out;
  out << "config,P,Pw,R_all,F1,R_ent,R_direct,R_quasi\n";
  char buf[64];
  for (const MetricsReport &r : reports) {
    out << r.config;
    for (double v : {r.precision, r.weighted_precision, r.recall_all, r.f1,
                     r.recall_entity, r.recall_direct, r.recall_quasi}) {
      std::snprintf(buf, sizeof(buf), ",%.4f", v);
      out << buf;
    }
    out << "\n";
  }
  return out.str();
}

std::string ReportsToJson(const std::vector<MetricsReport> &reports) {
  json root = json::array();
  for (const MetricsReport &r : reports) {
    json obj = json::object();
    obj["config"] = r.config;
    obj["precision"] = r.precision;
    obj["weighted_precision"] = r.weighted_precision;
    obj["recall_all"] = r.recall_all;
    obj["f1"] = r.f1;
    obj["recall_entity"] = r.recall_entity;
    obj["recall_direct"] = r.recall_direct;
    obj["recall_quasi"] = r.recall_quasi;
    obj["tp"] = r.tp;
    obj["fp"] = r.fp;
    obj["fn"] = r.fn;
    obj["weighted_tp"] = r.weighted_tp;
    obj["weighted_sys"] = r.weighted_sys;
    obj["entities"] = r.entities;
    obj["entities_protected"] = r.entities_protected;
    obj["direct"] = r.direct;
    obj["direct_protected"] = r.direct_protected;
    obj["quasi"] = r.quasi;
    obj["quasi_protected"] = r.quasi_protected;
    json flags = json::object();
    flags["precision"] = r.precision_degenerate;
    flags["weighted_precision"] = r.weighted_precision_degenerate;
    flags["recall_all"] = r.recall_degenerate;
    flags["recall_entity"] = r.entity_degenerate;
    flags["recall_direct"] = r.direct_degenerate;
    flags["recall_quasi"] = r.quasi_degenerate;
    obj["degenerate"] = std::move(flags);
    obj["scorer"] = r.scorer_name;
    root.push_back(std::move(obj));
  }
  return root.dump(2) + "\n";
}

void TypedTokenAccumulator::AddView(const std::vector<Token> &tokens,
                                    const std::vector<TypedSpan> &gold,
                                    const std::vector<TypedSpan> &predicted) {
  auto check = [](const std::vector<TypedSpan> &spans, const char *which) {
    std::vector<TypedSpan> sorted = spans;
    std::sort(sorted.begin(), sorted.end(),
              [](const TypedSpan &a, const TypedSpan &b) {
                return std::tie(a.start, a.end) < std::tie(b.start, b.end);
              });
    for (size_t i = 1; i < sorted.size(); ++i) {
      if (sorted[i].start < sorted[i - 1].end) {
        throw EvalError(std::string("overlapping ") + which +
                        " spans in typed token scoring");
      }
    }
  };
  check(gold, "gold");
  check(predicted, "predicted");

  for (const Token &token : tokens) {
    const TypedSpan *g = nullptr;
    const TypedSpan *p = nullptr;
    for (const TypedSpan &span : gold) {
      if (Overlaps(token.start, token.end, span.start, span.end)) {
        g = &span;
        break;
      }
    }
    for (const TypedSpan &span : predicted) {
      if (Overlaps(token.start, token.end, span.start, span.end)) {
        p = &span;
        break;
      }
    }
    if (g == nullptr && p == nullptr) continue;
    if (g != nullptr && p != nullptr) {
      ++binary_tp_;
      if (g->type == p->type) {
        ++cells_[g->type].tp;
      } else {
        ++cells_[g->type].fn;
        ++cells_[p->type].fp;
        ++confusion_[{g->type, p->type}];
      }
    } else if (p != nullptr) {
      ++binary_fp_;
      ++cells_[p->type].fp;
    } else {
      ++binary_fn_;
      ++cells_[g->type].fn;
    }
  }
}

TypedTokenScores TypedTokenAccumulator::Finalize() const {
  TypedTokenScores out;
  uint64_t tp = 0, fp = 0, fn = 0;
  for (const auto &[type, cell] : cells_) {
    PrfRow row;
    row.tp = cell.tp;
    row.fp = cell.fp;
    row.fn = cell.fn;
    FillPrf(&row);
    out.per_type[type] = row;
    tp += cell.tp;
    fp += cell.fp;
    fn += cell.fn;
  }
  out.micro_labeled.tp = tp;
  out.micro_labeled.fp = fp;
  out.micro_labeled.fn = fn;
  FillPrf(&out.micro_labeled);
  out.micro_unlabeled.tp = binary_tp_;
  out.micro_unlabeled.fp = binary_fp_;
  out.micro_unlabeled.fn = binary_fn_;
  FillPrf(&out.micro_unlabeled);
  out.confusion.assign(confusion_.begin(), confusion_.end());
  std::sort(out.confusion.begin(), out.confusion.end(),
            [](const auto &a, const auto &b) {
              if (a.second != b.second) return a.second > b.second;
              return a.first < b.first;
            });
  return out;
}

}  // namespace sanipipe
