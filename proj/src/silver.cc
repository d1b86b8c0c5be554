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

#include "sanipipe/silver.h"

#include <algorithm>
#include <set>
#include <sstream>

#include "json.hpp"

#include "sanipipe/io.h"

namespace sanipipe {

using nlohmann::json;

const char *ToString(SpanSource source) {
  switch (source) {
    case SpanSource::NER: return "NER";
    case SpanSource::GAZETTEER: return "GAZETTEER";
    default: return "MODEL";
  }
}

std::map<std::string, std::vector<PredictedSpan>> LoadPredictedSpans(
    const std::string &path, SpanSource source) {
  LineReader reader(path);
  std::map<std::string, std::vector<PredictedSpan>> out;
  std::string line;
  while (reader.ReadLine(&line)) {
    if (line.empty()) continue;
    const std::string where = path + ":" + std::to_string(reader.line_number());
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::parse_error &e) {
      throw SilverError(where + ": invalid JSON: " + e.what());
    }
    if (!obj.is_object() || !obj.contains("doc_id") ||
        !obj["doc_id"].is_string() || !obj.contains("spans") ||
        !obj["spans"].is_array()) {
      throw SilverError(where + ": expected {\"doc_id\", \"spans\"}");
    }
    std::string doc_id = obj["doc_id"].get<std::string>();
    if (out.count(doc_id) != 0) {
      throw SilverError(where + ": duplicate doc_id \"" + doc_id + "\"");
    }
    std::vector<PredictedSpan> spans;
    for (const json &s : obj["spans"]) {
      if (!s.is_object() || !s.contains("start") || !s.contains("end") ||
          !s.contains("label") || !s["start"].is_number_integer() ||
          !s["end"].is_number_integer() || !s["label"].is_string()) {
        throw SilverError(where + ": malformed span");
      }
      int64_t start = s["start"].get<int64_t>();
      int64_t end = s["end"].get<int64_t>();
      if (start < 0 || end <= start) {
        throw SilverError(where + ": empty or inverted span");
      }
      auto label = ParseSemanticType(s["label"].get<std::string>());
      if (!label) {
        throw SilverError(where + ": unknown label \"" +
                          s["label"].get<std::string>() + "\"");
      }
      PredictedSpan span;
      span.start = static_cast<size_t>(start);
      span.end = static_cast<size_t>(end);
      span.label = *label;
      span.source = source;
      spans.push_back(span);
    }
    std::sort(spans.begin(), spans.end(),
              [](const PredictedSpan &a, const PredictedSpan &b) {
                return std::tie(a.start, a.end) < std::tie(b.start, b.end);
              });
    for (size_t i = 1; i < spans.size(); ++i) {
      if (spans[i].start < spans[i - 1].end) {
        throw SilverError(where + ": overlapping spans in doc \"" + doc_id +
                          "\"");
      }
    }
    out.emplace(std::move(doc_id), std::move(spans));
  }
  return out;
}

void SavePredictedSpans(
    const std::map<std::string, std::vector<PredictedSpan>> &spans,
    const std::string &path) {
  std::ostringstream out;
  for (const auto &[doc_id, doc_spans] : spans) {
    json obj = json::object();
    obj["doc_id"] = doc_id;
    json arr = json::array();
    for (const PredictedSpan &span : doc_spans) {
      json s = json::object();
      s["start"] = span.start;
      s["end"] = span.end;
      s["label"] = ToString(span.label);
      arr.push_back(std::move(s));
    }
    obj["spans"] = std::move(arr);
    out << obj.dump() << "\n";
  }
  WriteFile(path, out.str());
}

std::vector<PredictedSpan> SpansFromMatches(
    const std::vector<GazetteerMatch> &matches) {
  std::vector<PredictedSpan> spans;
  spans.reserve(matches.size());
  for (const GazetteerMatch &match : matches) {
    PredictedSpan span;
    span.start = match.start;
    span.end = match.end;
    span.label = match.category == GazCategory::DEM ? SemanticType::DEM
                                                    : SemanticType::MISC;
    span.source = SpanSource::GAZETTEER;
    spans.push_back(span);
  }
  return spans;
}

std::vector<PredictedSpan> MergeAnnotations(
    const std::vector<PredictedSpan> &ner_spans,
    const std::vector<PredictedSpan> &gazetteer_spans) {
  // Pool both lists; source rank breaks ties (lower is stronger).
  struct Candidate {
    PredictedSpan span;
    int rank;
  };
  std::vector<Candidate> candidates;
  for (const PredictedSpan &span : ner_spans) {
    candidates.push_back({span, 0});
  }
  for (const PredictedSpan &span : gazetteer_spans) {
    candidates.push_back({span, 1});
  }

  // Identical spans collapse to the stronger source.
  std::sort(candidates.begin(), candidates.end(),
            [](const Candidate &a, const Candidate &b) {
              return std::tie(a.span.start, a.span.end, a.rank) <
                     std::tie(b.span.start, b.span.end, b.rank);
            });
  std::vector<Candidate> unique;
  for (const Candidate &c : candidates) {
    if (!unique.empty() && unique.back().span.start == c.span.start &&
        unique.back().span.end == c.span.end) {
      continue;
    }
    unique.push_back(c);
  }

  // Longest span wins at overlaps, as in gazetteer matching.
  std::vector<bool> dominated(unique.size(), false);
  for (size_t a = 0; a < unique.size(); ++a) {
    size_t len_a = unique[a].span.end - unique[a].span.start;
    for (size_t b = 0; b < unique.size(); ++b) {
      if (a == b) continue;
      size_t len_b = unique[b].span.end - unique[b].span.start;
      if (len_b <= len_a) continue;
      bool overlap = unique[a].span.start < unique[b].span.end &&
                     unique[b].span.start < unique[a].span.end;
      if (overlap) {
        dominated[a] = true;
        break;
      }
    }
  }
  // Remaining collisions are equal length at different offsets; the sweep
  // keeps the leftmost.
  std::vector<PredictedSpan> merged;
  for (size_t a = 0; a < unique.size(); ++a) {
    if (dominated[a]) continue;
    if (!merged.empty() && unique[a].span.start < merged.back().end) continue;
    merged.push_back(unique[a].span);
  }
  return merged;
}

std::vector<std::string> EmitBio(const std::string &text,
                                 const std::vector<PredictedSpan> &spans) {
  std::vector<Token> tokens = Tokenize(text);
  // -1: outside any span; otherwise index into spans.
  std::vector<int> owner(tokens.size(), -1);
  for (size_t s = 0; s < spans.size(); ++s) {
    for (size_t t = 0; t < tokens.size(); ++t) {
      if (owner[t] != -1) continue;
      bool overlap = tokens[t].start < spans[s].end &&
                     spans[s].start < tokens[t].end;
      if (overlap) owner[t] = static_cast<int>(s);
    }
  }
  std::vector<std::string> lines;
  lines.reserve(tokens.size());
  for (size_t t = 0; t < tokens.size(); ++t) {
    std::string tag = "O";
    if (owner[t] >= 0) {
      bool continues = t > 0 && owner[t - 1] == owner[t];
      tag = (continues ? "I-" : "B-") +
            std::string(ToString(spans[owner[t]].label));
    }
    lines.push_back(tokens[t].surface + "\t" + tag);
  }
  return lines;
}

std::vector<PredictedSpan> DecodeBio(const std::vector<std::string> &lines,
                                     const std::vector<Token> &tokens) {
  if (lines.size() != tokens.size()) {
    throw SilverError("BIO line count does not match token count");
  }
  std::vector<PredictedSpan> spans;
  for (size_t t = 0; t < lines.size(); ++t) {
    size_t tab = lines[t].rfind('\t');
    if (tab == std::string::npos) {
      throw SilverError("BIO line without tag: " + lines[t]);
    }
    std::string tag = lines[t].substr(tab + 1);
    if (tag == "O") continue;
    if (tag.size() < 3 || (tag[0] != 'B' && tag[0] != 'I') || tag[1] != '-') {
      throw SilverError("bad BIO tag: " + tag);
    }
    auto label = ParseSemanticType(tag.substr(2));
    if (!label) throw SilverError("bad BIO label: " + tag);
    // An I-tag extends the open span when the previous token was its tail and
    // the label agrees; any other I-tag starts a fresh span.
    bool continues = tag[0] == 'I' && t > 0 && !spans.empty() &&
                     spans.back().label == *label &&
                     spans.back().end == tokens[t - 1].end;
    if (continues) {
      spans.back().end = tokens[t].end;
    } else {
      PredictedSpan span;
      span.start = tokens[t].start;
      span.end = tokens[t].end;
      span.label = *label;
      span.source = SpanSource::MODEL;
      spans.push_back(span);
    }
  }
  return spans;
}

SilverReport BuildSilverCorpus(
    const Corpus &corpus,
    const std::map<std::string, std::vector<PredictedSpan>> &ner_spans,
    const std::vector<const Gazetteer *> &gazetteers, std::string *bio_out,
    std::map<std::string, std::vector<PredictedSpan>> *merged_out) {
  std::set<std::string> known;
  for (const Document &doc : corpus) known.insert(doc.doc_id);
  std::vector<std::string> unknown;
  for (const auto &[doc_id, spans] : ner_spans) {
    if (known.count(doc_id) == 0) unknown.push_back(doc_id);
  }
  if (!unknown.empty()) {
    std::string list;
    for (const std::string &id : unknown) {
      if (!list.empty()) list += ", ";
      list += id;
    }
    throw SilverError("detected spans reference unknown doc ids: " + list);
  }

  TermIndex index(gazetteers);
  SilverReport report;
  std::ostringstream bio;
  for (const Document &doc : corpus) {
    ++report.documents;
    std::vector<PredictedSpan> gaz = SpansFromMatches(index.Match(doc.text));
    std::vector<PredictedSpan> ner;
    auto it = ner_spans.find(doc.doc_id);
    if (it != ner_spans.end()) ner = it->second;
    size_t text_length = UTF8Length(doc.text);
    for (const PredictedSpan &span : ner) {
      if (span.end > text_length) {
        throw SilverError("doc \"" + doc.doc_id + "\": detected span [" +
                          std::to_string(span.start) + ", " +
                          std::to_string(span.end) + ") exceeds text length " +
                          std::to_string(text_length));
      }
    }
    std::vector<PredictedSpan> merged = MergeAnnotations(ner, gaz);
    for (const PredictedSpan &span : merged) {
      ++report.spans;
      ++report.spans_per_label[span.label];
      ++report.spans_per_source[span.source];
    }
    for (const std::string &line : EmitBio(doc.text, merged)) {
      bio << line << "\n";
    }
    bio << "\n";
    if (merged_out != nullptr) (*merged_out)[doc.doc_id] = std::move(merged);
  }
  if (bio_out != nullptr) *bio_out = bio.str();
  return report;
}

}  // namespace sanipipe
