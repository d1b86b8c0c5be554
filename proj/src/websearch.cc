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

#include "sanipipe/websearch.h"

#include <unistd.h>

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

#include "httplib.h"
#include "json.hpp"

#include "sanipipe/io.h"
#include "sanipipe/text.h"

namespace sanipipe {

using nlohmann::json;

std::string NormalizeUrl(std::string_view url) {
  std::string out(url);
  // Drop the fragment.
  size_t hash = out.find('#');
  if (hash != std::string::npos) out.erase(hash);
  // Scheme.
  size_t scheme_end = out.find("://");
  size_t host_begin = 0;
  if (scheme_end != std::string::npos) {
    for (size_t i = 0; i < scheme_end; ++i) {
      out[i] = static_cast<char>(std::tolower(static_cast<unsigned char>(out[i])));
    }
    host_begin = scheme_end + 3;
  }
  // Host runs to the first '/', '?' or end.
  size_t host_end = out.find_first_of("/?", host_begin);
  if (host_end == std::string::npos) host_end = out.size();
  for (size_t i = host_begin; i < host_end; ++i) {
    out[i] = static_cast<char>(std::tolower(static_cast<unsigned char>(out[i])));
  }
  return out;
}

namespace {

class SystemClock : public Clock {
 public:
  int64_t NowMicros() override {
    return std::chrono::duration_cast<std::chrono::microseconds>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
  }
  void SleepMicros(int64_t micros) override {
    std::this_thread::sleep_for(std::chrono::microseconds(micros));
  }
};

// Normalizes, deduplicates (first win) and truncates a URL list.
std::vector<std::string> CleanUrls(const std::vector<std::string> &urls) {
  std::vector<std::string> out;
  std::set<std::string> seen;
  for (const std::string &url : urls) {
    std::string normalized = NormalizeUrl(url);
    if (normalized.empty()) continue;
    if (seen.insert(normalized).second) {
      out.push_back(normalized);
      if (out.size() == 20) break;
    }
  }
  return out;
}

std::string UrlEncode(const std::string &value) {
  std::ostringstream out;
  out << std::hex << std::uppercase;
  for (unsigned char c : value) {
    if (std::isalnum(c) || c == '-' || c == '_' || c == '.' || c == '~') {
      out << static_cast<char>(c);
    } else {
      out << '%';
      out.width(2);
      out.fill('0');
      out << static_cast<int>(c);
    }
  }
  return out.str();
}

int64_t NowSeconds() {
  return std::chrono::duration_cast<std::chrono::seconds>(
             std::chrono::system_clock::now().time_since_epoch())
      .count();
}

}  // namespace

std::unique_ptr<Clock> MakeSystemClock() {
  return std::make_unique<SystemClock>();
}

RateLimiter::RateLimiter(double max_per_second, Clock *clock) : clock_(clock) {
  if (max_per_second <= 0) {
    throw WebSearchError("rate limit must be positive");
  }
  interval_micros_ = static_cast<int64_t>(1e6 / max_per_second);
}

void RateLimiter::Acquire() {
  std::lock_guard<std::mutex> lock(mutex_);
  int64_t now = clock_->NowMicros();
  if (now < next_allowed_) {
    clock_->SleepMicros(next_allowed_ - now);
    now = next_allowed_;
  }
  next_allowed_ = now + interval_micros_;
}

std::unique_ptr<SearchClient> SearchClient::Fixture(const std::string &path) {
  auto client = std::unique_ptr<SearchClient>(new SearchClient());
  client->fixture_mode_ = true;
  json root;
  try {
    root = json::parse(ReadFile(path));
  } catch (const json::parse_error &e) {
    throw WebSearchError(path + ": invalid JSON: " + e.what());
  }
  if (!root.is_object()) {
    throw WebSearchError(path + ": fixture root must be an object");
  }
  for (auto it = root.begin(); it != root.end(); ++it) {
    const json &entry = it.value();
    if (!entry.is_object() || !entry.contains("urls") ||
        !entry["urls"].is_array() || !entry.contains("total_hits") ||
        !entry["total_hits"].is_number()) {
      throw WebSearchError(path + ": bad fixture entry for query \"" +
                           it.key() + "\"");
    }
    SearchResult result;
    result.query = it.key();
    std::vector<std::string> urls;
    for (const json &u : entry["urls"]) {
      if (!u.is_string()) {
        throw WebSearchError(path + ": bad url in fixture entry \"" +
                             it.key() + "\"");
      }
      urls.push_back(u.get<std::string>());
    }
    result.urls = CleanUrls(urls);
    result.total_hits = entry["total_hits"].get<uint64_t>();
    client->cache_.emplace(it.key(), std::move(result));
  }
  return client;
}

std::unique_ptr<SearchClient> SearchClient::Live(
    SearchFetcher fetcher, const std::string &cache_path,
    double max_per_second, std::unique_ptr<Clock> clock) {
  auto client = std::unique_ptr<SearchClient>(new SearchClient());
  client->fetcher_ = std::move(fetcher);
  client->cache_path_ = cache_path;
  client->clock_ = clock ? std::move(clock) : MakeSystemClock();
  client->limiter_ =
      std::make_unique<RateLimiter>(max_per_second, client->clock_.get());
  if (!cache_path.empty() && FileExists(cache_path)) {
    LineReader reader(cache_path);
    std::string line;
    while (reader.ReadLine(&line)) {
      if (line.empty()) continue;
      json obj;
      try {
        obj = json::parse(line);
      } catch (const json::parse_error &e) {
        throw WebSearchError(cache_path + ":" +
                             std::to_string(reader.line_number()) +
                             ": invalid cache line: " + e.what());
      }
      SearchResult result;
      result.query = obj.value("query", "");
      for (const json &u : obj.value("urls", json::array())) {
        result.urls.push_back(u.get<std::string>());
      }
      result.total_hits = obj.value("total_hits", uint64_t{0});
      result.fetched_at = obj.value("fetched_at", int64_t{0});
      client->cache_[result.query] = std::move(result);
    }
  }
  return client;
}

std::unique_ptr<SearchClient> SearchClient::LiveFromEnv(
    const std::string &cache_path, double max_per_second) {
  const char *base = std::getenv("SANIPIPE_SEARCH_URL");
  if (base == nullptr || *base == '\0') {
    throw WebSearchError(
        "live search needs SANIPIPE_SEARCH_URL (and usually "
        "SANIPIPE_SEARCH_KEY, SANIPIPE_SEARCH_CX) in the environment");
  }
  std::string base_url = base;
  const char *key_env = std::getenv("SANIPIPE_SEARCH_KEY");
  const char *cx_env = std::getenv("SANIPIPE_SEARCH_CX");
  std::string key = key_env ? key_env : "";
  std::string cx = cx_env ? cx_env : "";

  SearchFetcher fetcher = [base_url, key, cx](const std::string &query) {
    // Split base into host part and path part.
    std::string scheme_host = base_url;
    std::string path = "/";
    size_t scheme_end = base_url.find("://");
    size_t path_begin =
        base_url.find('/', scheme_end == std::string::npos ? 0 : scheme_end + 3);
    if (path_begin != std::string::npos) {
      scheme_host = base_url.substr(0, path_begin);
      path = base_url.substr(path_begin);
    }
    httplib::Client http(scheme_host);
    http.set_connection_timeout(10);
    http.set_read_timeout(20);

    SearchResult result;
    result.query = query;
    std::vector<std::string> urls;
    // Two pages of ten results.
    for (int start : {1, 11}) {
      std::string url = path + "?q=" + UrlEncode(query) +
                        "&num=10&start=" + std::to_string(start);
      if (!key.empty()) url += "&key=" + UrlEncode(key);
      if (!cx.empty()) url += "&cx=" + UrlEncode(cx);
      auto res = http.Get(url);
      if (!res) {
        throw WebSearchError("transport error: " +
                             httplib::to_string(res.error()));
      }
      if (res->status < 200 || res->status >= 300) {
        throw WebSearchError("HTTP status " + std::to_string(res->status));
      }
      json body;
      try {
        body = json::parse(res->body);
      } catch (const json::parse_error &e) {
        throw WebSearchError(std::string("bad response JSON: ") + e.what());
      }
      if (body.contains("items") && body["items"].is_array()) {
        for (const json &item : body["items"]) {
          if (item.is_object() && item.contains("link") &&
              item["link"].is_string()) {
            urls.push_back(item["link"].get<std::string>());
          }
        }
      }
      if (start == 1 && body.contains("searchInformation") &&
          body["searchInformation"].is_object()) {
        const json &info = body["searchInformation"];
        if (info.contains("totalResults")) {
          if (info["totalResults"].is_string()) {
            result.total_hits =
                std::strtoull(info["totalResults"].get<std::string>().c_str(),
                              nullptr, 10);
          } else if (info["totalResults"].is_number()) {
            result.total_hits = info["totalResults"].get<uint64_t>();
          }
        }
      }
    }
    result.urls = urls;  // cleaned by the caller
    result.fetched_at = NowSeconds();
    return result;
  };
  return Live(std::move(fetcher), cache_path, max_per_second, nullptr);
}

SearchResult SearchClient::Search(const std::string &query) {
  std::lock_guard<std::mutex> lock(mutex_);
  auto it = cache_.find(query);
  if (it != cache_.end()) return it->second;
  if (fixture_mode_) throw UncachedQueryError(query);

  // Bounded retries on transient endpoint failures.
  std::string last_error;
  for (int attempt = 0; attempt < 3; ++attempt) {
    limiter_->Acquire();
    try {
      ++fetch_count_;
      SearchResult result = fetcher_(query);
      result.query = query;
      result.urls = CleanUrls(result.urls);
      if (result.fetched_at == 0) result.fetched_at = NowSeconds();
      cache_[query] = result;
      if (!cache_path_.empty()) {
        json obj = json::object();
        obj["query"] = result.query;
        obj["urls"] = result.urls;
        obj["total_hits"] = result.total_hits;
        obj["fetched_at"] = result.fetched_at;
        std::ofstream out(cache_path_, std::ios::app);
        out << obj.dump() << "\n";
      }
      return result;
    } catch (const std::exception &e) {
      last_error = e.what();
    }
  }
  throw SearchEndpointError(query, last_error);
}

std::set<std::string> SearchClient::PersonUrls(const std::string &person_name) {
  std::string query = "\"" + CollapseWhitespace(person_name) + "\"";
  SearchResult result = Search(query);
  return std::set<std::string>(result.urls.begin(), result.urls.end());
}

std::string SpanQuery(const std::string &text, size_t start, size_t end,
                      bool quote) {
  std::string surface = CollapseWhitespace(UTF8Substring(text, start, end));
  if (!quote) return surface;
  return "\"" + surface + "\"";
}

std::vector<std::string> SpanQueries(
    const std::string &text,
    const std::vector<std::pair<size_t, size_t>> &spans, bool quote) {
  std::vector<std::string> queries;
  std::set<std::string> seen;
  for (const auto &[start, end] : spans) {
    std::string query = SpanQuery(text, start, end, quote);
    if (seen.insert(query).second) queries.push_back(query);
  }
  return queries;
}

void SaveFixture(const std::map<std::string, SearchResult> &entries,
                 const std::string &path) {
  json root = json::object();
  for (const auto &[query, result] : entries) {
    json entry = json::object();
    entry["urls"] = result.urls;
    entry["total_hits"] = result.total_hits;
    root[query] = std::move(entry);
  }
  WriteFile(path, root.dump(2) + "\n");
}

}  // namespace sanipipe
