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

#ifndef SANIPIPE_CORPUS_H_
#define SANIPIPE_CORPUS_H_

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "sanipipe/text.h"

// Document model for annotated corpora. A document carries raw text plus one
// annotation set per annotator; every mention is a code point span labeled
// with a semantic type and a masking decision.

namespace sanipipe {

class CorpusError : public std::runtime_error {
 public:
  explicit CorpusError(const std::string &msg) : std::runtime_error(msg) {}
};

// Closed label set for mention spans.
enum class SemanticType {
  CODE,
  ORG,
  DATETIME,
  LOC,
  QUANTITY,
  PERSON,
  DEM,
  MISC,
};

inline constexpr int kNumSemanticTypes = 8;

// How strongly a mention identifies the document's person: direct identifiers
// name them outright, quasi identifiers narrow them down in combination, and
// NO_MASK mentions were judged safe to keep.
enum class IdentifierKind {
  DIRECT,
  QUASI,
  NO_MASK,
};

const char *ToString(SemanticType type);
const char *ToString(IdentifierKind kind);
std::optional<SemanticType> ParseSemanticType(const std::string &name);
std::optional<IdentifierKind> ParseIdentifierKind(const std::string &name);

// A single annotated span. Offsets are code points into Document::text with
// start < end <= text length. entity_id groups mentions of the same entity
// within one annotator's annotation set.
struct Mention {
  size_t start = 0;
  size_t end = 0;
  SemanticType semantic_type = SemanticType::MISC;
  IdentifierKind identifier_kind = IdentifierKind::NO_MASK;
  bool confidential = false;
  std::string entity_id;

  bool operator==(const Mention &other) const = default;
};

// One annotator's view of a document. Mentions are kept sorted by
// (start, end) and never overlap each other.
struct AnnotationSet {
  std::vector<Mention> mentions;
};

struct Document {
  std::string doc_id;
  std::string text;
  std::optional<std::string> target_name;
  // Keyed by annotator id; ordered for deterministic iteration.
  std::map<std::string, AnnotationSet> annotations;

  bool operator==(const Document &other) const = default;
};

using Corpus = std::vector<Document>;

// Mentions of one entity within a single annotation set. kind is the most
// severe identifier kind over the cluster's mentions (DIRECT > QUASI >
// NO_MASK).
struct EntityCluster {
  std::string entity_id;
  std::vector<size_t> mention_indices;  // indices into AnnotationSet::mentions
  IdentifierKind kind = IdentifierKind::NO_MASK;
};

struct CorpusStats {
  size_t documents = 0;
  size_t annotation_sets = 0;
  size_t mentions = 0;
  size_t tokens = 0;
  std::map<SemanticType, size_t> mentions_per_type;
  std::map<IdentifierKind, size_t> mentions_per_kind;
  size_t clusters = 0;
};

// Loads a corpus from a JSON file. The file holds an array of documents:
//
//   [{"doc_id": "...", "text": "...", "target_name": "..."|null,
//     "annotations": {"<annotator>": [{"start": 0, "end": 5,
//       "semantic_type": "PERSON", "identifier_kind": "DIRECT",
//       "confidential": false, "entity_id": "e1"}, ...]}}, ...]
//
// Unknown keys, missing keys, bad types, out-of-range or overlapping spans,
// duplicate doc ids and invalid UTF-8 all raise CorpusError naming the
// offending document and field. Mentions are sorted by (start, end) on load.
Corpus LoadCorpus(const std::string &path);

// Parses a corpus from an in-memory JSON string. Same checks as LoadCorpus.
Corpus ParseCorpusJson(const std::string &json_text, const std::string &origin);

// Serializes and writes a corpus. SaveCorpus followed by LoadCorpus
// reproduces the same in-memory value.
std::string CorpusToJson(const Corpus &corpus);
void SaveCorpus(const Corpus &corpus, const std::string &path);

// Groups an annotation set's mentions by entity_id in order of first
// appearance and computes each cluster's most severe identifier kind.
std::vector<EntityCluster> ExtractClusters(const AnnotationSet &annotations);

// Returns true when a is at least as severe as b (DIRECT > QUASI > NO_MASK).
bool AtLeastAsSevere(IdentifierKind a, IdentifierKind b);

CorpusStats ComputeCorpusStats(const Corpus &corpus);
std::string FormatCorpusStats(const CorpusStats &stats);

}  // namespace sanipipe

#endif  // SANIPIPE_CORPUS_H_
