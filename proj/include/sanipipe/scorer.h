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

#ifndef SANIPIPE_SCORER_H_
#define SANIPIPE_SCORER_H_

#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

// Language model scoring. A scorer assigns a log probability to each token of
// a span given the rest of the document. Two implementations: a smoothed word
// n-gram model trained locally, and a line-protocol client that delegates to
// an external model server.

namespace sanipipe {

// Placeholder substituted for tokens that must be hidden from the model.
inline constexpr const char *kMaskToken = "[MASK]";

class ScorerError : public std::runtime_error {
 public:
  explicit ScorerError(const std::string &msg) : std::runtime_error(msg) {}
};
class ScorerTimeout : public ScorerError {
 public:
  explicit ScorerTimeout(const std::string &msg) : ScorerError(msg) {}
};
class ScorerProtocolError : public ScorerError {
 public:
  explicit ScorerProtocolError(const std::string &msg) : ScorerError(msg) {}
};
class ScorerIdMismatch : public ScorerError {
 public:
  explicit ScorerIdMismatch(const std::string &msg) : ScorerError(msg) {}
};
class ScorerLengthMismatch : public ScorerError {
 public:
  explicit ScorerLengthMismatch(const std::string &msg) : ScorerError(msg) {}
};

class Scorer {
 public:
  virtual ~Scorer() = default;

  // Log probability of each token in [begin, end) of tokens, one value per
  // token, each <= 0. Already scored positions inside the span condition on
  // their actual surface (left-to-right fill), so for causal models this is
  // ordinary chain-rule scoring.
  virtual std::vector<double> SpanLogProbs(const std::vector<std::string> &tokens,
                                           size_t begin, size_t end) const = 0;

  virtual std::string name() const = 0;
};

// Information content of one token: max(0, -log p). Rare tokens score high,
// predictable ones near zero.
double TokenInformationContent(const Scorer &scorer,
                               const std::vector<std::string> &tokens,
                               size_t index);

// Word n-gram model with additive smoothing and back-off to shorter
// histories. Out-of-vocabulary tokens (including the mask placeholder) map to
// a single unknown class, so the distribution over vocabulary + UNK sums to
// one for every history. add_k = 0 is legal but can yield -inf for unseen
// continuations of seen histories.
class NGramScorer : public Scorer {
 public:
  // Trains on raw texts (tokenized internally). order >= 1. Throws
  // ScorerError when the corpus has no tokens.
  static NGramScorer Train(const std::vector<std::string> &texts, int order,
                           double add_k);

  std::vector<double> SpanLogProbs(const std::vector<std::string> &tokens,
                                   size_t begin, size_t end) const override;
  std::string name() const override;

  // P(token | history), backing off to the longest seen suffix of history.
  // Sums to 1 over vocabulary + UNK for any fixed history when add_k > 0.
  double CondProb(const std::vector<std::string> &history,
                  const std::string &token) const;

  // Plain-text model file; save then load reproduces identical scores and a
  // byte-identical re-save.
  void Save(const std::string &path) const;
  static NGramScorer Load(const std::string &path);

  int order() const { return order_; }
  double add_k() const { return add_k_; }
  size_t vocab_size() const { return vocab_.size(); }

 private:
  NGramScorer() = default;

  int TokenId(const std::string &token) const;
  void CountGrams(const std::vector<int> &ids);

  int order_ = 3;
  double add_k_ = 0.1;
  std::vector<std::string> id_to_token_;
  std::map<std::string, int> vocab_;
  // grams_[m] maps an (m+1)-gram of token ids to its count; contexts_[m] maps
  // an m-gram history to the number of tokens observed after it. contexts_[0]
  // holds the total token count under the empty history.
  std::vector<std::map<std::vector<int>, uint64_t>> grams_;
  std::vector<std::map<std::vector<int>, uint64_t>> contexts_;
};

// Wire format of one scoring request/response line. Requests carry the full
// token list and the span to score; responses echo the request id.
struct ScoreRequest {
  std::string id;
  std::vector<std::string> tokens;
  size_t begin = 0;
  size_t end = 0;
};
struct ScoreResponse {
  std::string id;
  std::vector<double> logprobs;
};

std::string SerializeScoreRequest(const ScoreRequest &request);
ScoreRequest ParseScoreRequest(const std::string &line);
std::string SerializeScoreResponse(const ScoreResponse &response);
ScoreResponse ParseScoreResponse(const std::string &line);

// Byte-stream transport speaking newline-delimited messages.
class LineTransport {
 public:
  virtual ~LineTransport() = default;
  virtual void SendLine(const std::string &line) = 0;
  // Blocks up to timeout_ms; nullopt on closed stream.
  virtual std::optional<std::string> RecvLine(int timeout_ms) = 0;
};

// Spawns a child process and talks over its stdin/stdout.
std::unique_ptr<LineTransport> MakeProcessTransport(
    const std::vector<std::string> &argv);

// Connects to host:port.
std::unique_ptr<LineTransport> MakeTcpTransport(const std::string &host,
                                                int port);

// Scorer backed by an external server. Requests within a batch are pipelined
// and responses may come back in any order; they are matched by id. Errors
// are typed: ScorerTimeout, ScorerProtocolError (unparseable line or logprob
// > 0 / non-finite), ScorerIdMismatch (unknown or missing ids),
// ScorerLengthMismatch (response length != span length).
class ExternalScorer : public Scorer {
 public:
  explicit ExternalScorer(std::unique_ptr<LineTransport> transport,
                          int timeout_ms = 30000,
                          const std::string &label = "external");

  std::vector<double> SpanLogProbs(const std::vector<std::string> &tokens,
                                   size_t begin, size_t end) const override;
  std::string name() const override;

  std::vector<ScoreResponse> ScoreBatch(
      const std::vector<ScoreRequest> &requests) const;

 private:
  std::unique_ptr<LineTransport> transport_;
  int timeout_ms_;
  std::string label_;
  mutable uint64_t next_id_ = 0;
};

}  // namespace sanipipe

#endif  // SANIPIPE_SCORER_H_
