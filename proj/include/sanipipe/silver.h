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

#ifndef SANIPIPE_SILVER_H_
#define SANIPIPE_SILVER_H_

#include <map>
#include <string>
#include <vector>

#include "sanipipe/corpus.h"
#include "sanipipe/gazetteer.h"

// Silver annotation assembly: detected spans from an off-the-shelf tagger are
// merged with gazetteer hits into one non-overlapping span list per document,
// which can be emitted as token/BIO-tag training data.

namespace sanipipe {

class SilverError : public std::runtime_error {
 public:
  explicit SilverError(const std::string &msg) : std::runtime_error(msg) {}
};

// Where a detected span came from.
enum class SpanSource { NER, GAZETTEER, MODEL };

const char *ToString(SpanSource source);

// A detected (not gold) span. Offsets are code points into the document text.
struct PredictedSpan {
  size_t start = 0;
  size_t end = 0;
  SemanticType label = SemanticType::MISC;
  SpanSource source = SpanSource::MODEL;

  bool operator==(const PredictedSpan &other) const = default;
};

// Reads detected spans, one JSON object per line:
//   {"doc_id": "...", "spans": [{"start": 0, "end": 4, "label": "PERSON"}]}
// Spans within a document must be sortable to a non-overlapping sequence;
// violations and unknown labels raise SilverError with the line number.
// Every span is tagged with the given source.
std::map<std::string, std::vector<PredictedSpan>> LoadPredictedSpans(
    const std::string &path, SpanSource source);

// Writes detected spans in the same line format, documents in map order.
void SavePredictedSpans(
    const std::map<std::string, std::vector<PredictedSpan>> &spans,
    const std::string &path);

// Converts gazetteer matches to detected spans (DEM and MISC labels).
std::vector<PredictedSpan> SpansFromMatches(
    const std::vector<GazetteerMatch> &matches);

// Merges two detected span lists into one non-overlapping list. At overlaps
// the longer span wins regardless of which list it came from; when both lists
// contain the very same span the tagger (first argument) wins, and
// equal-length spans at different offsets go to the leftmost. Output is
// sorted by (start, end). Merging a list with an empty list returns the list
// unchanged, so the operation is idempotent on already merged input.
std::vector<PredictedSpan> MergeAnnotations(
    const std::vector<PredictedSpan> &ner_spans,
    const std::vector<PredictedSpan> &gazetteer_spans);

// Renders one document as token<TAB>tag lines using BIO tags ("O",
// "B-PERSON", "I-PERSON", ...). Spans are snapped outward to token
// boundaries; a token claimed by two snapped spans goes to the earlier one.
std::vector<std::string> EmitBio(const std::string &text,
                                 const std::vector<PredictedSpan> &spans);

// Inverse of EmitBio for token-aligned spans: decodes tag lines back into
// spans with code point offsets.
std::vector<PredictedSpan> DecodeBio(const std::vector<std::string> &lines,
                                     const std::vector<Token> &tokens);

struct SilverReport {
  size_t documents = 0;
  size_t spans = 0;
  std::map<SemanticType, size_t> spans_per_label;
  std::map<SpanSource, size_t> spans_per_source;
};

// Runs merge over a whole corpus and streams BIO blocks (blank line between
// documents) to out. ner_spans may be empty for a gazetteer-only corpus; ner
// doc ids that do not occur in the corpus raise SilverError listing them.
SilverReport BuildSilverCorpus(
    const Corpus &corpus,
    const std::map<std::string, std::vector<PredictedSpan>> &ner_spans,
    const std::vector<const Gazetteer *> &gazetteers, std::string *bio_out,
    std::map<std::string, std::vector<PredictedSpan>> *merged_out);

}  // namespace sanipipe

#endif  // SANIPIPE_SILVER_H_
