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

#include "sanipipe/corpus.h"

#include <algorithm>
#include <set>
#include <sstream>

#include "json.hpp"

#include "sanipipe/io.h"

namespace sanipipe {

using nlohmann::json;

namespace {

const char *kSemanticNames[] = {"CODE",     "ORG",    "DATETIME", "LOC",
                                "QUANTITY", "PERSON", "DEM",      "MISC"};
const char *kKindNames[] = {"DIRECT", "QUASI", "NO_MASK"};

[[noreturn]] void Fail(const std::string &origin, const std::string &what) {
  throw CorpusError(origin + ": " + what);
}

void CheckKeys(const json &obj, const std::set<std::string> &allowed,
               const std::string &origin, const std::string &where) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (allowed.count(it.key()) == 0) {
      Fail(origin, where + ": unknown key \"" + it.key() + "\"");
    }
  }
}

Mention ParseMention(const json &m, const std::string &origin,
                     const std::string &where, size_t text_length) {
  if (!m.is_object()) Fail(origin, where + ": mention is not an object");
  CheckKeys(m,
            {"start", "end", "semantic_type", "identifier_kind", "confidential",
             "entity_id"},
            origin, where);
  for (const char *key : {"start", "end", "semantic_type", "identifier_kind",
                          "confidential", "entity_id"}) {
    if (!m.contains(key)) Fail(origin, where + ": missing key \"" + key + "\"");
  }
  Mention out;
  if (!m["start"].is_number_integer() || !m["end"].is_number_integer()) {
    Fail(origin, where + ": start/end must be integers");
  }
  int64_t start = m["start"].get<int64_t>();
  int64_t end = m["end"].get<int64_t>();
  if (start < 0 || end < 0) Fail(origin, where + ": negative span offset");
  out.start = static_cast<size_t>(start);
  out.end = static_cast<size_t>(end);
  if (out.start >= out.end) {
    Fail(origin, where + ": empty or inverted span [" + std::to_string(start) +
                     ", " + std::to_string(end) + ")");
  }
  if (out.end > text_length) {
    Fail(origin, where + ": span end " + std::to_string(end) +
                     " exceeds text length " + std::to_string(text_length));
  }
  if (!m["semantic_type"].is_string()) {
    Fail(origin, where + ": semantic_type must be a string");
  }
  auto type = ParseSemanticType(m["semantic_type"].get<std::string>());
  if (!type) {
    Fail(origin, where + ": unknown semantic_type \"" +
                     m["semantic_type"].get<std::string>() + "\"");
  }
  out.semantic_type = *type;
  if (!m["identifier_kind"].is_string()) {
    Fail(origin, where + ": identifier_kind must be a string");
  }
  auto kind = ParseIdentifierKind(m["identifier_kind"].get<std::string>());
  if (!kind) {
    Fail(origin, where + ": unknown identifier_kind \"" +
                     m["identifier_kind"].get<std::string>() + "\"");
  }
  out.identifier_kind = *kind;
  if (!m["confidential"].is_boolean()) {
    Fail(origin, where + ": confidential must be a boolean");
  }
  out.confidential = m["confidential"].get<bool>();
  if (!m["entity_id"].is_string()) {
    Fail(origin, where + ": entity_id must be a string");
  }
  out.entity_id = m["entity_id"].get<std::string>();
  if (out.entity_id.empty()) Fail(origin, where + ": empty entity_id");
  return out;
}

Document ParseDocument(const json &d, const std::string &origin, size_t index) {
  std::string where = "document #" + std::to_string(index);
  if (!d.is_object()) Fail(origin, where + " is not an object");
  // Resolve the doc id before any other validation so later errors can
  // name the document instead of its array position.
  if (!d.contains("doc_id")) Fail(origin, where + ": missing key \"doc_id\"");
  Document doc;
  if (!d["doc_id"].is_string()) Fail(origin, where + ": doc_id must be a string");
  doc.doc_id = d["doc_id"].get<std::string>();
  if (doc.doc_id.empty()) Fail(origin, where + ": empty doc_id");
  where = "document \"" + doc.doc_id + "\"";
  CheckKeys(d, {"doc_id", "text", "target_name", "annotations"}, origin, where);
  for (const char *key : {"text", "target_name", "annotations"}) {
    if (!d.contains(key)) Fail(origin, where + ": missing key \"" + key + "\"");
  }
  if (!d["text"].is_string()) Fail(origin, where + ": text must be a string");
  doc.text = d["text"].get<std::string>();
  size_t text_length = 0;
  try {
    text_length = UTF8Length(doc.text);
  } catch (const Utf8Error &e) {
    Fail(origin, where + ": text is not valid UTF-8 (" + e.what() + ")");
  }
  if (d["target_name"].is_string()) {
    doc.target_name = d["target_name"].get<std::string>();
  } else if (!d["target_name"].is_null()) {
    Fail(origin, where + ": target_name must be a string or null");
  }
  if (!d["annotations"].is_object()) {
    Fail(origin, where + ": annotations must be an object");
  }
  for (auto it = d["annotations"].begin(); it != d["annotations"].end(); ++it) {
    const std::string &annotator = it.key();
    if (annotator.empty()) Fail(origin, where + ": empty annotator id");
    if (!it.value().is_array()) {
      Fail(origin, where + ": annotator \"" + annotator +
                       "\" mentions must be an array");
    }
    AnnotationSet set;
    size_t mi = 0;
    for (const json &m : it.value()) {
      std::string mwhere = where + ", annotator \"" + annotator +
                           "\", mention #" + std::to_string(mi++);
      set.mentions.push_back(ParseMention(m, origin, mwhere, text_length));
    }
    std::sort(set.mentions.begin(), set.mentions.end(),
              [](const Mention &a, const Mention &b) {
                return std::tie(a.start, a.end) < std::tie(b.start, b.end);
              });
    for (size_t i = 1; i < set.mentions.size(); ++i) {
      if (set.mentions[i].start < set.mentions[i - 1].end) {
        Fail(origin, where + ": annotator \"" + annotator +
                         "\" has overlapping mentions at [" +
                         std::to_string(set.mentions[i - 1].start) + ", " +
                         std::to_string(set.mentions[i - 1].end) + ") and [" +
                         std::to_string(set.mentions[i].start) + ", " +
                         std::to_string(set.mentions[i].end) + ")");
      }
    }
    doc.annotations.emplace(annotator, std::move(set));
  }
  return doc;
}

json MentionToJson(const Mention &m) {
  json out = json::object();
  out["start"] = m.start;
  out["end"] = m.end;
  out["semantic_type"] = ToString(m.semantic_type);
  out["identifier_kind"] = ToString(m.identifier_kind);
  out["confidential"] = m.confidential;
  out["entity_id"] = m.entity_id;
  return out;
}

}  // namespace

const char *ToString(SemanticType type) {
  return kSemanticNames[static_cast<int>(type)];
}

const char *ToString(IdentifierKind kind) {
  return kKindNames[static_cast<int>(kind)];
}

std::optional<SemanticType> ParseSemanticType(const std::string &name) {
  for (int i = 0; i < kNumSemanticTypes; ++i) {
    if (name == kSemanticNames[i]) return static_cast<SemanticType>(i);
  }
  return std::nullopt;
}

std::optional<IdentifierKind> ParseIdentifierKind(const std::string &name) {
  for (int i = 0; i < 3; ++i) {
    if (name == kKindNames[i]) return static_cast<IdentifierKind>(i);
  }
  return std::nullopt;
}

Corpus ParseCorpusJson(const std::string &json_text,
                       const std::string &origin) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error &e) {
    Fail(origin, std::string("invalid JSON: ") + e.what());
  }
  if (!root.is_array()) Fail(origin, "top-level value must be an array");
  Corpus corpus;
  std::set<std::string> seen_ids;
  size_t index = 0;
  for (const json &d : root) {
    Document doc = ParseDocument(d, origin, index++);
    if (!seen_ids.insert(doc.doc_id).second) {
      Fail(origin, "duplicate doc_id \"" + doc.doc_id + "\"");
    }
    corpus.push_back(std::move(doc));
  }
  return corpus;
}

Corpus LoadCorpus(const std::string &path) {
  return ParseCorpusJson(ReadFile(path), path);
}

std::string CorpusToJson(const Corpus &corpus) {
  json root = json::array();
  for (const Document &doc : corpus) {
    json d = json::object();
    d["doc_id"] = doc.doc_id;
    d["text"] = doc.text;
    if (doc.target_name) {
      d["target_name"] = *doc.target_name;
    } else {
      d["target_name"] = nullptr;
    }
    json ann = json::object();
    for (const auto &[annotator, set] : doc.annotations) {
      json mentions = json::array();
      for (const Mention &m : set.mentions) mentions.push_back(MentionToJson(m));
      ann[annotator] = std::move(mentions);
    }
    d["annotations"] = std::move(ann);
    root.push_back(std::move(d));
  }
  return root.dump(2) + "\n";
}

void SaveCorpus(const Corpus &corpus, const std::string &path) {
  WriteFile(path, CorpusToJson(corpus));
}

bool AtLeastAsSevere(IdentifierKind a, IdentifierKind b) {
  return static_cast<int>(a) <= static_cast<int>(b);
}

std::vector<EntityCluster> ExtractClusters(const AnnotationSet &annotations) {
  std::vector<EntityCluster> clusters;
  std::map<std::string, size_t> index_of;
  for (size_t i = 0; i < annotations.mentions.size(); ++i) {
    const Mention &m = annotations.mentions[i];
    auto it = index_of.find(m.entity_id);
    if (it == index_of.end()) {
      index_of.emplace(m.entity_id, clusters.size());
      EntityCluster cluster;
      cluster.entity_id = m.entity_id;
      cluster.mention_indices.push_back(i);
      cluster.kind = m.identifier_kind;
      clusters.push_back(std::move(cluster));
    } else {
      EntityCluster &cluster = clusters[it->second];
      cluster.mention_indices.push_back(i);
      if (AtLeastAsSevere(m.identifier_kind, cluster.kind)) {
        cluster.kind = m.identifier_kind;
      }
    }
  }
  return clusters;
}

CorpusStats ComputeCorpusStats(const Corpus &corpus) {
  CorpusStats stats;
  stats.documents = corpus.size();
  for (const Document &doc : corpus) {
    stats.tokens += Tokenize(doc.text).size();
    for (const auto &[annotator, set] : doc.annotations) {
      ++stats.annotation_sets;
      stats.mentions += set.mentions.size();
      for (const Mention &m : set.mentions) {
        ++stats.mentions_per_type[m.semantic_type];
        ++stats.mentions_per_kind[m.identifier_kind];
      }
      stats.clusters += ExtractClusters(set).size();
    }
  }
  return stats;
}

std::string FormatCorpusStats(const CorpusStats &stats) {
  std::ostringstream out;
  out << "documents: " << stats.documents << "\n";
  out << "annotation sets: " << stats.annotation_sets << "\n";
  out << "tokens: " << stats.tokens << "\n";
  out << "mentions: " << stats.mentions << "\n";
  out << "entity clusters: " << stats.clusters << "\n";
  for (const auto &[type, count] : stats.mentions_per_type) {
    out << "  type " << ToString(type) << ": " << count << "\n";
  }
  for (const auto &[kind, count] : stats.mentions_per_kind) {
    out << "  kind " << ToString(kind) << ": " << count << "\n";
  }
  return out.str();
}

}  // namespace sanipipe
