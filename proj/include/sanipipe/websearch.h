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

#ifndef SANIPIPE_WEBSEARCH_H_
#define SANIPIPE_WEBSEARCH_H_

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "sanipipe/corpus.h"

// Web search plumbing for the searchability risk signal. Spans and person
// names are issued as quoted queries; result URLs and hit counts feed the
// risk decision. Runs either against a recorded fixture (hermetic, for tests
// and demos) or a live JSON search endpoint with caching and rate limiting.

namespace sanipipe {

class WebSearchError : public std::runtime_error {
 public:
  explicit WebSearchError(const std::string &msg) : std::runtime_error(msg) {}
};

// Fixture mode only: the query was not recorded.
class UncachedQueryError : public WebSearchError {
 public:
  explicit UncachedQueryError(const std::string &query)
      : WebSearchError("query not in fixture: " + query), query_(query) {}
  const std::string &query() const { return query_; }

 private:
  std::string query_;
};

// Live mode: the endpoint kept failing after retries.
class SearchEndpointError : public WebSearchError {
 public:
  SearchEndpointError(const std::string &query, const std::string &detail)
      : WebSearchError("search failed for " + query + ": " + detail) {}
};

struct SearchResult {
  std::string query;
  std::vector<std::string> urls;   // normalized, deduplicated, at most 20
  uint64_t total_hits = 0;
  int64_t fetched_at = 0;          // unix seconds; 0 for fixture entries

  bool operator==(const SearchResult &other) const = default;
};

// Lowercases the scheme and host and strips the fragment; path, query string
// and everything else keep their case. Comparing search results across
// queries uses this form.
std::string NormalizeUrl(std::string_view url);

// Injectable time source so rate limiting is testable without sleeping.
class Clock {
 public:
  virtual ~Clock() = default;
  virtual int64_t NowMicros() = 0;
  virtual void SleepMicros(int64_t micros) = 0;
};

std::unique_ptr<Clock> MakeSystemClock();

// Spaces out acquisitions to at most max_per_second. N acquisitions take at
// least (N-1)/max_per_second seconds of clock time.
class RateLimiter {
 public:
  RateLimiter(double max_per_second, Clock *clock);
  void Acquire();

 private:
  int64_t interval_micros_;
  Clock *clock_;
  int64_t next_allowed_ = 0;
  std::mutex mutex_;
};

// Signature of the raw fetch step in live mode; injectable for tests.
// Receives the query, returns the parsed result. Throws on transport errors.
using SearchFetcher = std::function<SearchResult(const std::string &query)>;

// Search frontend with two modes.
//
// Fixture mode replays a recorded JSON file mapping query strings to
// {"urls": [...], "total_hits": N}; unknown queries raise UncachedQueryError
// so hermetic runs can never silently hit the network.
//
// Live mode issues HTTP requests through a fetcher built from the
// SANIPIPE_SEARCH_URL, SANIPIPE_SEARCH_KEY and SANIPIPE_SEARCH_CX environment
// variables (two result pages of ten), retries transient failures a bounded
// number of times, rate limits, and appends every fresh result to a JSONL
// cache keyed by the exact query string so reruns are free and reproducible.
class SearchClient {
 public:
  // Hermetic client over a fixture file.
  static std::unique_ptr<SearchClient> Fixture(const std::string &path);

  // Live client; cache_path may be empty for no persistent cache. Throws
  // WebSearchError when SANIPIPE_SEARCH_URL is unset.
  static std::unique_ptr<SearchClient> LiveFromEnv(const std::string &cache_path,
                                                   double max_per_second);

  // Live client with an injected fetcher (tests).
  static std::unique_ptr<SearchClient> Live(SearchFetcher fetcher,
                                            const std::string &cache_path,
                                            double max_per_second,
                                            std::unique_ptr<Clock> clock);

  // Cached or fixture result for the exact query string. URLs come back
  // normalized, deduplicated (first win) and truncated to 20.
  SearchResult Search(const std::string &query);

  // URL set identifying a person: results of searching their quoted name.
  std::set<std::string> PersonUrls(const std::string &person_name);

  size_t fetch_count() const { return fetch_count_; }

 private:
  SearchClient() = default;

  bool fixture_mode_ = false;
  SearchFetcher fetcher_;
  std::string cache_path_;
  std::map<std::string, SearchResult> cache_;
  std::unique_ptr<Clock> clock_;
  std::unique_ptr<RateLimiter> limiter_;
  std::mutex mutex_;
  size_t fetch_count_ = 0;
};

// Builds the search query for a span: the span text with whitespace runs
// collapsed, wrapped in double quotes (quoting optional). Queries for a span
// list come back deduplicated in first-appearance order.
std::string SpanQuery(const std::string &text, size_t start, size_t end,
                      bool quote = true);
std::vector<std::string> SpanQueries(
    const std::string &text,
    const std::vector<std::pair<size_t, size_t>> &spans, bool quote = true);

// Writes fixtures compatible with SearchClient::Fixture.
void SaveFixture(const std::map<std::string, SearchResult> &entries,
                 const std::string &path);

}  // namespace sanipipe

#endif  // SANIPIPE_WEBSEARCH_H_
