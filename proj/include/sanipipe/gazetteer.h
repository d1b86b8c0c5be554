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

#ifndef SANIPIPE_GAZETTEER_H_
#define SANIPIPE_GAZETTEER_H_

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "sanipipe/text.h"

// Gazetteers of personal attribute terms harvested from a knowledge base
// dump. Humans (instance-of Q5) are scanned for a configured set of
// properties; the values become lookup terms in one of two term lists:
// demographic attributes (DEM) and a broad miscellaneous list (MISC).

namespace sanipipe {

class GazetteerError : public std::runtime_error {
 public:
  explicit GazetteerError(const std::string &msg) : std::runtime_error(msg) {}
};

enum class GazCategory { DEM, MISC };

const char *ToString(GazCategory category);
std::optional<GazCategory> ParseGazCategory(const std::string &name);

// One harvested property: which property id to scan for and which term list
// its values belong to.
struct PropertySpec {
  std::string property_id;
  GazCategory category = GazCategory::MISC;
  std::string label;
};

// Reads the property table: tab-separated lines "property_id<TAB>category
// <TAB>label" with '#' comment lines allowed. Throws GazetteerError with the
// line number on malformed rows, unknown categories or duplicate ids.
std::vector<PropertySpec> LoadPropertySpecs(const std::string &path);

// Canonical form used for both stored terms and query text: lowercased,
// whitespace runs collapsed to single spaces, leading and trailing
// punctuation stripped. Idempotent.
std::string NormalizeTerm(std::string_view raw);

// Why a candidate term was not inserted.
enum class TermDrop {
  NONE,          // term is usable
  EMPTY,         // nothing left after normalization
  SINGLE_CHAR,   // one character only
  DIGITS_ONLY,   // a bare number
};

// Applies the build-time exclusion rules to a normalized term.
TermDrop ClassifyTerm(const std::string &normalized);

// One term list. Terms are stored normalized; each term remembers the
// property ids (or other provenance tags) that contributed it.
class Gazetteer {
 public:
  Gazetteer() = default;
  explicit Gazetteer(GazCategory category) : category_(category) {}

  GazCategory category() const { return category_; }
  size_t size() const { return terms_.size(); }
  bool Contains(const std::string &normalized_term) const {
    return terms_.count(normalized_term) != 0;
  }

  // Normalizes, applies the exclusion rules and inserts. Returns the drop
  // reason (NONE when the term went in; duplicates merge provenance and
  // also return NONE).
  TermDrop Add(std::string_view raw_term, const std::string &provenance);

  const std::map<std::string, std::set<std::string>> &terms() const {
    return terms_;
  }

 private:
  GazCategory category_ = GazCategory::MISC;
  std::map<std::string, std::set<std::string>> terms_;
};

// Writes a gazetteer as sorted tab-separated lines
// "term<TAB>category<TAB>p1,p2". Output is byte-identical across runs.
void SaveGazetteer(const Gazetteer &gazetteer, const std::string &path);

// Loads a gazetteer file. Comment lines start with '#'. Rows with missing
// fields, unknown categories or categories that disagree within one file
// raise GazetteerError with the line number.
Gazetteer LoadGazetteer(const std::string &path);

// Adds terms from a plain text file (one term per line, '#' comments) to a
// gazetteer. Returns the number of terms added (merges excluded rows count
// via the same rules as Add).
size_t AugmentFromTermFile(Gazetteer *gazetteer, const std::string &path,
                           const std::string &provenance);

// Resolves entity ids to display labels during dump extraction. The streaming
// parser asks for labels of entity-valued claims; string-valued claims never
// reach the resolver.
class LabelResolver {
 public:
  virtual ~LabelResolver() = default;
  virtual std::optional<std::string> Resolve(const std::string &entity_id) const = 0;
  // Alternative labels of an entity, used only when alias harvesting is on.
  virtual std::vector<std::string> Aliases(const std::string &) const {
    return {};
  }
};

// In-memory resolver for tests and small runs.
class MapLabelResolver : public LabelResolver {
 public:
  void Set(const std::string &entity_id, const std::string &label) {
    labels_[entity_id] = label;
  }
  void AddAlias(const std::string &entity_id, const std::string &alias) {
    aliases_[entity_id].push_back(alias);
  }
  std::optional<std::string> Resolve(const std::string &entity_id) const override;
  std::vector<std::string> Aliases(const std::string &entity_id) const override;

 private:
  std::map<std::string, std::string> labels_;
  std::map<std::string, std::vector<std::string>> aliases_;
};

// A harvested (property, value label) pair.
struct PropertyValue {
  std::string property_id;
  std::string label;
};

struct StreamStats {
  uint64_t lines = 0;        // lines seen, including skipped ones
  uint64_t entities = 0;     // well-formed entity records
  uint64_t humans = 0;       // entities passing the instance-of filter
  uint64_t malformed = 0;    // lines skipped as unparseable
  uint64_t values = 0;       // property values emitted
  uint64_t unresolved = 0;   // entity-valued claims without a label
};

// Pulls lines one at a time; returns false at end of stream.
using LineSource = std::function<bool(std::string *)>;

// Line source over an in-memory string (used by tests).
LineSource StringLines(std::string text);

// Line source over a file, transparently inflating gzip.
LineSource FileLines(const std::string &path);

// Streams a knowledge base dump in the one-entity-per-line JSON layout,
// tolerating surrounding array brackets and trailing commas. For every entity
// that is an instance of Q5 (human), the claims for each configured property
// are extracted: string and monolingual text values directly, entity
// references through the resolver. Unresolvable references and malformed
// lines are skipped and counted, never fatal. Emission order is
// deterministic: line order, then property order as listed in specs.
StreamStats ParseEntityStream(const LineSource &lines,
                              const std::vector<PropertySpec> &specs,
                              const LabelResolver &resolver,
                              bool include_aliases,
                              const std::function<void(const PropertyValue &)> &sink);

struct DumpExtraction {
  std::vector<PropertyValue> values;
  StreamStats stats;
};

// Two-pass extraction over a dump file: pass one collects string values and
// the entity ids referenced by claims, pass two resolves those ids to labels
// from the same dump. Memory grows with the number of distinct referenced
// values, never with dump length.
DumpExtraction ExtractDumpValues(const std::string &dump_path,
                                 const std::vector<PropertySpec> &specs,
                                 const std::string &lang,
                                 bool include_aliases);

struct GazetteerBuild {
  Gazetteer dem{GazCategory::DEM};
  Gazetteer misc{GazCategory::MISC};
  std::map<TermDrop, size_t> dropped;
};

// Routes harvested values into the DEM or MISC list according to the property
// table and applies the exclusion rules. Values of properties missing from
// specs raise GazetteerError.
GazetteerBuild BuildGazetteers(const std::vector<PropertyValue> &values,
                               const std::vector<PropertySpec> &specs);

// A gazetteer hit in a document. start/end are code point offsets aligned to
// token boundaries, and NormalizeTerm(text[start:end]) == term.
struct GazetteerMatch {
  size_t start = 0;
  size_t end = 0;
  GazCategory category = GazCategory::MISC;
  std::string term;

  bool operator==(const GazetteerMatch &other) const = default;
};

// Token-sequence index over one or more gazetteers for fast span matching.
class TermIndex {
 public:
  explicit TermIndex(const std::vector<const Gazetteer *> &gazetteers);

  // Finds gazetteer hits in text. Matching compares the lowercased token
  // sequence of the text against the token sequences of the stored terms.
  // Overlaps are resolved by dropping any candidate that overlaps a strictly
  // longer one, then keeping the leftmost of equal-length rivals, so the
  // result is sorted and non-overlapping with longest spans winning. When the
  // same span is found in both lists, DEM wins.
  std::vector<GazetteerMatch> Match(std::string_view text) const;
  std::vector<GazetteerMatch> Match(std::string_view text,
                                    const std::vector<Token> &tokens) const;

 private:
  struct Node {
    std::map<std::string, int> next;
    // Bit 0: DEM terminal, bit 1: MISC terminal.
    unsigned terminal = 0;
  };
  std::vector<Node> nodes_;
};

// Convenience wrapper: builds a TermIndex and matches once.
std::vector<GazetteerMatch> MatchSpans(
    std::string_view text, const std::vector<const Gazetteer *> &gazetteers);

}  // namespace sanipipe

#endif  // SANIPIPE_GAZETTEER_H_
