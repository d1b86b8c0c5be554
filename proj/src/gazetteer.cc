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

#include "sanipipe/gazetteer.h"

#include <algorithm>
#include <memory>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "json.hpp"

#include "sanipipe/io.h"

namespace sanipipe {

using nlohmann::json;

const char *ToString(GazCategory category) {
  return category == GazCategory::DEM ? "DEM" : "MISC";
}

std::optional<GazCategory> ParseGazCategory(const std::string &name) {
  if (name == "DEM") return GazCategory::DEM;
  if (name == "MISC") return GazCategory::MISC;
  return std::nullopt;
}

namespace {

std::vector<std::string> SplitTab(const std::string &line) {
  std::vector<std::string> fields;
  size_t start = 0;
  while (true) {
    size_t tab = line.find('\t', start);
    if (tab == std::string::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
  return fields;
}

bool IsCommentOrBlank(const std::string &line) {
  for (char c : line) {
    if (c == '#') return true;
    if (c != ' ' && c != '\t') return false;
  }
  return true;  // blank
}

// Property ids are "P" followed by digits. Anything else in the first
// column usually means the columns were swapped.
bool ValidPropertyId(const std::string &id) {
  if (id.size() < 2 || id[0] != 'P') return false;
  for (size_t i = 1; i < id.size(); ++i) {
    if (id[i] < '0' || id[i] > '9') return false;
  }
  return true;
}

}  // namespace

std::vector<PropertySpec> LoadPropertySpecs(const std::string &path) {
  LineReader reader(path);
  std::vector<PropertySpec> specs;
  std::unordered_set<std::string> seen;
  std::string line;
  while (reader.ReadLine(&line)) {
    if (IsCommentOrBlank(line)) continue;
    std::vector<std::string> fields = SplitTab(line);
    if (fields.size() != 3) {
      throw GazetteerError(path + ":" + std::to_string(reader.line_number()) +
                           ": expected 3 tab-separated fields, got " +
                           std::to_string(fields.size()));
    }
    PropertySpec spec;
    spec.property_id = fields[0];
    if (!ValidPropertyId(spec.property_id)) {
      throw GazetteerError(path + ":" + std::to_string(reader.line_number()) +
                           ": malformed property id \"" + spec.property_id +
                           "\" (expected P followed by digits)");
    }
    auto category = ParseGazCategory(fields[1]);
    if (!category) {
      throw GazetteerError(path + ":" + std::to_string(reader.line_number()) +
                           ": unknown category \"" + fields[1] + "\"");
    }
    spec.category = *category;
    spec.label = fields[2];
    if (!seen.insert(spec.property_id).second) {
      throw GazetteerError(path + ":" + std::to_string(reader.line_number()) +
                           ": duplicate property id " + spec.property_id);
    }
    specs.push_back(std::move(spec));
  }
  return specs;
}

std::string NormalizeTerm(std::string_view raw) {
  std::u32string chars = DecodeUTF8(raw);
  for (char32_t &c : chars) c = ToLowerChar(c);
  // Trim whitespace and edge punctuation until stable.
  size_t begin = 0;
  size_t end = chars.size();
  while (begin < end) {
    char32_t front = chars[begin];
    char32_t back = chars[end - 1];
    if (IsSpaceChar(front) || !IsWordChar(front)) {
      ++begin;
      continue;
    }
    if (IsSpaceChar(back) || !IsWordChar(back)) {
      --end;
      continue;
    }
    break;
  }
  std::u32string trimmed(chars.begin() + begin, chars.begin() + end);
  return CollapseWhitespace(EncodeUTF8(trimmed));
}

TermDrop ClassifyTerm(const std::string &normalized) {
  if (normalized.empty()) return TermDrop::EMPTY;
  std::u32string chars = DecodeUTF8(normalized);
  if (chars.size() == 1) return TermDrop::SINGLE_CHAR;
  std::vector<Token> tokens = Tokenize(normalized);
  if (tokens.size() == 1) {
    bool all_digits = true;
    for (char32_t c : DecodeUTF8(tokens[0].surface)) {
      if (!IsDigitChar(c)) {
        all_digits = false;
        break;
      }
    }
    if (all_digits) return TermDrop::DIGITS_ONLY;
  }
  return TermDrop::NONE;
}

TermDrop Gazetteer::Add(std::string_view raw_term,
                        const std::string &provenance) {
  std::string normalized = NormalizeTerm(raw_term);
  TermDrop drop = ClassifyTerm(normalized);
  if (drop != TermDrop::NONE) return drop;
  terms_[normalized].insert(provenance);
  return TermDrop::NONE;
}

void SaveGazetteer(const Gazetteer &gazetteer, const std::string &path) {
  std::ostringstream out;
  const char *category = ToString(gazetteer.category());
  for (const auto &[term, provenance] : gazetteer.terms()) {
    out << term << '\t' << category << '\t';
    bool first = true;
    for (const std::string &p : provenance) {
      if (!first) out << ',';
      out << p;
      first = false;
    }
    out << '\n';
  }
  WriteFile(path, out.str());
}

Gazetteer LoadGazetteer(const std::string &path) {
  LineReader reader(path);
  std::string line;
  std::optional<GazCategory> file_category;
  std::map<std::string, std::set<std::string>> terms;
  while (reader.ReadLine(&line)) {
    if (IsCommentOrBlank(line)) continue;
    std::vector<std::string> fields = SplitTab(line);
    if (fields.size() != 3) {
      throw GazetteerError(path + ":" + std::to_string(reader.line_number()) +
                           ": expected 3 tab-separated fields, got " +
                           std::to_string(fields.size()));
    }
    if (fields[0].empty()) {
      throw GazetteerError(path + ":" + std::to_string(reader.line_number()) +
                           ": empty term");
    }
    auto category = ParseGazCategory(fields[1]);
    if (!category) {
      throw GazetteerError(path + ":" + std::to_string(reader.line_number()) +
                           ": unknown category \"" + fields[1] + "\"");
    }
    if (file_category && *file_category != *category) {
      throw GazetteerError(path + ":" + std::to_string(reader.line_number()) +
                           ": mixed categories in one gazetteer file");
    }
    file_category = *category;
    std::set<std::string> provenance;
    std::stringstream ps(fields[2]);
    std::string p;
    while (std::getline(ps, p, ',')) {
      if (!p.empty()) provenance.insert(p);
    }
    terms[fields[0]].insert(provenance.begin(), provenance.end());
  }
  Gazetteer gazetteer(file_category.value_or(GazCategory::MISC));
  for (auto &[term, provenance] : terms) {
    // Stored terms are trusted to be normalized already; re-normalize to be
    // safe against hand-edited files.
    std::string normalized = NormalizeTerm(term);
    if (ClassifyTerm(normalized) != TermDrop::NONE) continue;
    for (const std::string &p : provenance) gazetteer.Add(term, p);
  }
  return gazetteer;
}

size_t AugmentFromTermFile(Gazetteer *gazetteer, const std::string &path,
                           const std::string &provenance) {
  LineReader reader(path);
  std::string line;
  size_t added = 0;
  while (reader.ReadLine(&line)) {
    if (IsCommentOrBlank(line)) continue;
    if (gazetteer->Add(line, provenance) == TermDrop::NONE) ++added;
  }
  return added;
}

std::optional<std::string> MapLabelResolver::Resolve(
    const std::string &entity_id) const {
  auto it = labels_.find(entity_id);
  if (it == labels_.end()) return std::nullopt;
  return it->second;
}

std::vector<std::string> MapLabelResolver::Aliases(
    const std::string &entity_id) const {
  auto it = aliases_.find(entity_id);
  if (it == aliases_.end()) return {};
  return it->second;
}

LineSource StringLines(std::string text) {
  auto state = std::make_shared<std::pair<std::string, size_t>>(std::move(text), 0);
  return [state](std::string *line) {
    if (state->second >= state->first.size()) return false;
    size_t nl = state->first.find('\n', state->second);
    if (nl == std::string::npos) nl = state->first.size();
    size_t len = nl - state->second;
    if (len > 0 && state->first[nl - 1] == '\r') --len;
    line->assign(state->first, state->second, len);
    state->second = nl + 1;
    return true;
  };
}

LineSource FileLines(const std::string &path) {
  auto reader = std::make_shared<LineReader>(path);
  return [reader](std::string *line) { return reader->ReadLine(line); };
}

namespace {

// A claim value is either a literal string or a reference to another entity.
struct ClaimValue {
  bool is_entity = false;
  std::string text;  // literal text or entity id
};

// The parts of one dump line the harvester cares about.
struct EntityRecord {
  std::string id;
  bool human = false;
  // (property id, values) in specs order; only configured properties kept.
  std::vector<std::pair<std::string, std::vector<ClaimValue>>> claims;
  std::optional<std::string> label;
  std::vector<std::string> aliases;
};

// Strips a trailing comma and surrounding whitespace; returns false for lines
// that hold no entity (blank, "[", "]").
bool PrepareLine(std::string *line) {
  size_t end = line->size();
  while (end > 0 && (isspace(static_cast<unsigned char>((*line)[end - 1])) ||
                     (*line)[end - 1] == ',')) {
    --end;
  }
  size_t begin = 0;
  while (begin < end && isspace(static_cast<unsigned char>((*line)[begin]))) {
    ++begin;
  }
  *line = line->substr(begin, end - begin);
  return !(line->empty() || *line == "[" || *line == "]");
}

std::vector<ClaimValue> ExtractClaimValues(const json &statements) {
  std::vector<ClaimValue> values;
  if (!statements.is_array()) return values;
  for (const json &statement : statements) {
    if (!statement.is_object() || !statement.contains("mainsnak")) continue;
    const json &snak = statement["mainsnak"];
    if (!snak.is_object()) continue;
    if (snak.value("snaktype", "") != "value") continue;
    if (!snak.contains("datavalue")) continue;
    const json &dv = snak["datavalue"];
    if (!dv.is_object() || !dv.contains("type") || !dv.contains("value")) continue;
    const std::string type = dv["type"].get<std::string>();
    const json &value = dv["value"];
    ClaimValue cv;
    if (type == "wikibase-entityid") {
      if (value.is_object() && value.contains("id") && value["id"].is_string()) {
        cv.is_entity = true;
        cv.text = value["id"].get<std::string>();
        values.push_back(std::move(cv));
      }
    } else if (type == "string") {
      if (value.is_string()) {
        cv.text = value.get<std::string>();
        values.push_back(std::move(cv));
      }
    } else if (type == "monolingualtext") {
      if (value.is_object() && value.contains("text") &&
          value["text"].is_string()) {
        cv.text = value["text"].get<std::string>();
        values.push_back(std::move(cv));
      }
    }
    // Quantities, dates and coordinates make poor lookup terms; skipped.
  }
  return values;
}

bool IsHuman(const json &entity) {
  if (!entity.contains("claims") || !entity["claims"].is_object()) return false;
  const json &claims = entity["claims"];
  if (!claims.contains("P31")) return false;
  for (const ClaimValue &cv : ExtractClaimValues(claims["P31"])) {
    if (cv.is_entity && cv.text == "Q5") return true;
  }
  return false;
}

std::optional<EntityRecord> ParseEntityLine(
    const std::string &line, const std::vector<PropertySpec> &specs,
    const std::string &lang) {
  json entity;
  try {
    entity = json::parse(line);
  } catch (const json::parse_error &) {
    return std::nullopt;
  }
  if (!entity.is_object() || !entity.contains("id") ||
      !entity["id"].is_string()) {
    return std::nullopt;
  }
  EntityRecord record;
  record.id = entity["id"].get<std::string>();
  record.human = IsHuman(entity);
  if (record.human && entity.contains("claims") &&
      entity["claims"].is_object()) {
    const json &claims = entity["claims"];
    for (const PropertySpec &spec : specs) {
      if (!claims.contains(spec.property_id)) continue;
      std::vector<ClaimValue> values =
          ExtractClaimValues(claims[spec.property_id]);
      if (!values.empty()) {
        record.claims.emplace_back(spec.property_id, std::move(values));
      }
    }
  }
  if (entity.contains("labels") && entity["labels"].is_object()) {
    const json &labels = entity["labels"];
    if (labels.contains(lang) && labels[lang].is_object() &&
        labels[lang].contains("value") && labels[lang]["value"].is_string()) {
      record.label = labels[lang]["value"].get<std::string>();
    }
  }
  if (entity.contains("aliases") && entity["aliases"].is_object()) {
    const json &aliases = entity["aliases"];
    if (aliases.contains(lang) && aliases[lang].is_array()) {
      for (const json &alias : aliases[lang]) {
        if (alias.is_object() && alias.contains("value") &&
            alias["value"].is_string()) {
          record.aliases.push_back(alias["value"].get<std::string>());
        }
      }
    }
  }
  return record;
}

}  // namespace

StreamStats ParseEntityStream(
    const LineSource &lines, const std::vector<PropertySpec> &specs,
    const LabelResolver &resolver, bool include_aliases,
    const std::function<void(const PropertyValue &)> &sink) {
  StreamStats stats;
  std::string line;
  while (lines(&line)) {
    ++stats.lines;
    if (!PrepareLine(&line)) continue;
    std::optional<EntityRecord> record = ParseEntityLine(line, specs, "en");
    if (!record) {
      ++stats.malformed;
      continue;
    }
    ++stats.entities;
    if (!record->human) continue;
    ++stats.humans;
    for (const auto &[property_id, values] : record->claims) {
      for (const ClaimValue &cv : values) {
        if (!cv.is_entity) {
          sink(PropertyValue{property_id, cv.text});
          ++stats.values;
          continue;
        }
        std::optional<std::string> label = resolver.Resolve(cv.text);
        if (!label) {
          ++stats.unresolved;
          continue;
        }
        sink(PropertyValue{property_id, *label});
        ++stats.values;
        if (include_aliases) {
          for (const std::string &alias : resolver.Aliases(cv.text)) {
            sink(PropertyValue{property_id, alias});
            ++stats.values;
          }
        }
      }
    }
  }
  return stats;
}

DumpExtraction ExtractDumpValues(const std::string &dump_path,
                                 const std::vector<PropertySpec> &specs,
                                 const std::string &lang,
                                 bool include_aliases) {
  DumpExtraction out;
  StreamStats &stats = out.stats;

  // Pass one: literal values straight to the output, entity references into a
  // pending list.
  std::vector<std::pair<std::string, std::string>> pending;  // (property, id)
  std::unordered_set<std::string> needed;
  {
    LineReader reader(dump_path);
    std::string line;
    while (reader.ReadLine(&line)) {
      ++stats.lines;
      if (!PrepareLine(&line)) continue;
      std::optional<EntityRecord> record = ParseEntityLine(line, specs, lang);
      if (!record) {
        ++stats.malformed;
        continue;
      }
      ++stats.entities;
      if (!record->human) continue;
      ++stats.humans;
      for (const auto &[property_id, values] : record->claims) {
        for (const ClaimValue &cv : values) {
          if (cv.is_entity) {
            pending.emplace_back(property_id, cv.text);
            needed.insert(cv.text);
          } else {
            out.values.push_back(PropertyValue{property_id, cv.text});
            ++stats.values;
          }
        }
      }
    }
  }

  // Pass two: pick up labels for the referenced entities.
  MapLabelResolver resolver;
  if (!needed.empty()) {
    LineReader reader(dump_path);
    std::string line;
    size_t found = 0;
    while (reader.ReadLine(&line) && found < needed.size()) {
      if (!PrepareLine(&line)) continue;
      // Cheap pre-filter: the id appears early in the line.
      std::optional<EntityRecord> record = ParseEntityLine(line, {}, lang);
      if (!record || needed.count(record->id) == 0) continue;
      ++found;
      if (record->label) resolver.Set(record->id, *record->label);
      if (include_aliases) {
        for (const std::string &alias : record->aliases) {
          resolver.AddAlias(record->id, alias);
        }
      }
    }
  }
  for (const auto &[property_id, entity_id] : pending) {
    std::optional<std::string> label = resolver.Resolve(entity_id);
    if (!label) {
      ++stats.unresolved;
      continue;
    }
    out.values.push_back(PropertyValue{property_id, *label});
    ++stats.values;
    if (include_aliases) {
      for (const std::string &alias : resolver.Aliases(entity_id)) {
        out.values.push_back(PropertyValue{property_id, alias});
        ++stats.values;
      }
    }
  }
  return out;
}

GazetteerBuild BuildGazetteers(const std::vector<PropertyValue> &values,
                               const std::vector<PropertySpec> &specs) {
  std::unordered_map<std::string, GazCategory> category_of;
  for (const PropertySpec &spec : specs) {
    category_of[spec.property_id] = spec.category;
  }
  GazetteerBuild build;
  for (const PropertyValue &value : values) {
    auto it = category_of.find(value.property_id);
    if (it == category_of.end()) {
      throw GazetteerError("value for property " + value.property_id +
                           " has no entry in the property table");
    }
    Gazetteer &target =
        it->second == GazCategory::DEM ? build.dem : build.misc;
    TermDrop drop = target.Add(value.label, value.property_id);
    if (drop != TermDrop::NONE) ++build.dropped[drop];
  }
  return build;
}

TermIndex::TermIndex(const std::vector<const Gazetteer *> &gazetteers) {
  nodes_.emplace_back();
  for (const Gazetteer *gazetteer : gazetteers) {
    unsigned bit = gazetteer->category() == GazCategory::DEM ? 1u : 2u;
    for (const auto &[term, provenance] : gazetteer->terms()) {
      std::vector<Token> tokens = Tokenize(term);
      if (tokens.empty()) continue;
      int node = 0;
      for (const Token &token : tokens) {
        auto [it, inserted] =
            nodes_[node].next.try_emplace(token.surface, 0);
        if (inserted) {
          it->second = static_cast<int>(nodes_.size());
          nodes_.emplace_back();
        }
        node = it->second;
      }
      nodes_[node].terminal |= bit;
    }
  }
}

std::vector<GazetteerMatch> TermIndex::Match(std::string_view text) const {
  return Match(text, Tokenize(text));
}

std::vector<GazetteerMatch> TermIndex::Match(
    std::string_view text, const std::vector<Token> &tokens) const {
  struct Candidate {
    size_t start, end;  // code points
    GazCategory category;
  };

  // Lowercased token surfaces drive the trie walk.
  std::vector<std::string> lowered;
  lowered.reserve(tokens.size());
  for (const Token &token : tokens) lowered.push_back(LowerCopy(token.surface));

  std::vector<Candidate> candidates;
  for (size_t i = 0; i < tokens.size(); ++i) {
    int node = 0;
    for (size_t j = i; j < tokens.size(); ++j) {
      auto it = nodes_[node].next.find(lowered[j]);
      if (it == nodes_[node].next.end()) break;
      node = it->second;
      if (nodes_[node].terminal != 0) {
        Candidate c;
        c.start = tokens[i].start;
        c.end = tokens[j].end;
        // DEM preferred when the same span is in both lists.
        c.category = (nodes_[node].terminal & 1u) ? GazCategory::DEM
                                                  : GazCategory::MISC;
        candidates.push_back(c);
      }
    }
  }

  // Longest span wins: drop candidates overlapped by a strictly longer one.
  // Survivors can then only collide at equal length, where the leftmost is
  // kept by the sweep below.
  std::vector<bool> dominated(candidates.size(), false);
  for (size_t a = 0; a < candidates.size(); ++a) {
    for (size_t b = 0; b < candidates.size(); ++b) {
      if (a == b) continue;
      size_t len_a = candidates[a].end - candidates[a].start;
      size_t len_b = candidates[b].end - candidates[b].start;
      if (len_b <= len_a) continue;
      bool overlap = candidates[a].start < candidates[b].end &&
                     candidates[b].start < candidates[a].end;
      if (overlap) {
        dominated[a] = true;
        break;
      }
    }
  }
  std::vector<Candidate> survivors;
  for (size_t a = 0; a < candidates.size(); ++a) {
    if (!dominated[a]) survivors.push_back(candidates[a]);
  }
  std::sort(survivors.begin(), survivors.end(),
            [](const Candidate &a, const Candidate &b) {
              return std::tie(a.start, a.end) < std::tie(b.start, b.end);
            });

  std::vector<GazetteerMatch> matches;
  size_t last_end = 0;
  for (const Candidate &c : survivors) {
    if (!matches.empty() && c.start < last_end) continue;
    GazetteerMatch match;
    match.start = c.start;
    match.end = c.end;
    match.category = c.category;
    match.term = NormalizeTerm(UTF8Substring(text, c.start, c.end));
    matches.push_back(std::move(match));
    last_end = c.end;
  }
  return matches;
}

std::vector<GazetteerMatch> MatchSpans(
    std::string_view text, const std::vector<const Gazetteer *> &gazetteers) {
  return TermIndex(gazetteers).Match(text);
}

}  // namespace sanipipe
