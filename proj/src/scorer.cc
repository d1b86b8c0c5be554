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

#include "sanipipe/scorer.h"

#include <fcntl.h>
#include <netdb.h>
#include <poll.h>
#include <signal.h>
#include <sys/socket.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cmath>
#include <cstring>
#include <set>
#include <sstream>

#include "json.hpp"

#include "sanipipe/io.h"
#include "sanipipe/text.h"

namespace sanipipe {

using nlohmann::json;

double TokenInformationContent(const Scorer &scorer,
                               const std::vector<std::string> &tokens,
                               size_t index) {
  if (index >= tokens.size()) {
    throw ScorerError("token index out of range");
  }
  std::vector<double> lp = scorer.SpanLogProbs(tokens, index, index + 1);
  return std::max(0.0, -lp.at(0));
}

// ---------------------------------------------------------------------------
// N-gram model
// ---------------------------------------------------------------------------

int NGramScorer::TokenId(const std::string &token) const {
  auto it = vocab_.find(token);
  return it == vocab_.end() ? -1 : it->second;
}

void NGramScorer::CountGrams(const std::vector<int> &ids) {
  for (int m = 0; m < order_; ++m) {
    const size_t len = static_cast<size_t>(m) + 1;
    if (ids.size() < len) break;
    for (size_t i = 0; i + len <= ids.size(); ++i) {
      std::vector<int> gram(ids.begin() + i, ids.begin() + i + len);
      std::vector<int> prefix(gram.begin(), gram.end() - 1);
      ++grams_[m][gram];
      ++contexts_[m][prefix];
    }
  }
}

NGramScorer NGramScorer::Train(const std::vector<std::string> &texts, int order,
                               double add_k) {
  if (order < 1) throw ScorerError("n-gram order must be >= 1");
  if (add_k < 0) throw ScorerError("add_k must be >= 0");
  NGramScorer model;
  model.order_ = order;
  model.add_k_ = add_k;
  model.grams_.resize(order);
  model.contexts_.resize(order);
  size_t total = 0;
  for (const std::string &text : texts) {
    std::vector<Token> tokens = Tokenize(text);
    std::vector<int> ids;
    ids.reserve(tokens.size());
    for (const Token &token : tokens) {
      auto [it, inserted] = model.vocab_.try_emplace(
          token.surface, static_cast<int>(model.id_to_token_.size()));
      if (inserted) model.id_to_token_.push_back(token.surface);
      ids.push_back(it->second);
    }
    total += ids.size();
    model.CountGrams(ids);
  }
  if (total == 0) throw ScorerError("cannot train n-gram model: no tokens");
  return model;
}

double NGramScorer::CondProb(const std::vector<std::string> &history,
                             const std::string &token) const {
  const int v = TokenId(token);
  size_t max_h = std::min(history.size(), static_cast<size_t>(order_ - 1));
  std::vector<int> h;
  h.reserve(max_h);
  for (size_t i = history.size() - max_h; i < history.size(); ++i) {
    h.push_back(TokenId(history[i]));
  }
  const double v1 = static_cast<double>(vocab_.size()) + 1.0;  // + UNK
  for (size_t m = h.size() + 1; m-- > 0;) {
    std::vector<int> hh(h.end() - m, h.end());
    uint64_t ctx = 0;
    auto cit = contexts_[m].find(hh);
    if (cit != contexts_[m].end()) ctx = cit->second;
    if (ctx == 0 && m > 0) continue;  // unseen history: back off
    std::vector<int> gram = hh;
    gram.push_back(v);
    uint64_t count = 0;
    auto git = grams_[m].find(gram);
    if (git != grams_[m].end()) count = git->second;
    return (static_cast<double>(count) + add_k_) /
           (static_cast<double>(ctx) + add_k_ * v1);
  }
  return 0.0;  // unreachable: the empty history is always seen
}

std::vector<double> NGramScorer::SpanLogProbs(
    const std::vector<std::string> &tokens, size_t begin, size_t end) const {
  if (begin > end || end > tokens.size()) {
    throw ScorerError("span out of range");
  }
  std::vector<double> out;
  out.reserve(end - begin);
  for (size_t p = begin; p < end; ++p) {
    size_t h_begin = p >= static_cast<size_t>(order_ - 1)
                         ? p - static_cast<size_t>(order_ - 1)
                         : 0;
    std::vector<std::string> history(tokens.begin() + h_begin,
                                     tokens.begin() + p);
    out.push_back(std::log(CondProb(history, tokens[p])));
  }
  return out;
}

std::string NGramScorer::name() const {
  std::ostringstream out;
  out << "ngram-" << order_ << "-addk-" << add_k_;
  return out.str();
}

void NGramScorer::Save(const std::string &path) const {
  std::ostringstream out;
  out.precision(17);
  out << "ngram-model\t1\n";
  out << "order\t" << order_ << "\n";
  out << "add_k\t" << add_k_ << "\n";
  out << "vocab\t" << id_to_token_.size() << "\n";
  for (const std::string &token : id_to_token_) {
    out << "V\t" << token << "\n";
  }
  for (int m = 0; m < order_; ++m) {
    for (const auto &[gram, count] : grams_[m]) {
      out << "C\t" << count << "\t";
      for (size_t i = 0; i < gram.size(); ++i) {
        if (i > 0) out << ' ';
        out << id_to_token_[gram[i]];
      }
      out << "\n";
    }
  }
  WriteFile(path, out.str());
}

NGramScorer NGramScorer::Load(const std::string &path) {
  LineReader reader(path);
  std::string line;
  auto fail = [&](const std::string &what) -> ScorerError {
    return ScorerError(path + ":" + std::to_string(reader.line_number()) +
                       ": " + what);
  };
  auto expect = [&](const char *key) -> std::string {
    if (!reader.ReadLine(&line)) throw fail("unexpected end of model file");
    size_t tab = line.find('\t');
    if (tab == std::string::npos || line.substr(0, tab) != key) {
      throw fail(std::string("expected \"") + key + "\" line");
    }
    return line.substr(tab + 1);
  };
  if (expect("ngram-model") != "1") throw fail("unsupported model version");
  NGramScorer model;
  model.order_ = std::stoi(expect("order"));
  if (model.order_ < 1) throw fail("bad order");
  model.add_k_ = std::stod(expect("add_k"));
  size_t vocab_size = std::stoul(expect("vocab"));
  model.grams_.resize(model.order_);
  model.contexts_.resize(model.order_);
  for (size_t i = 0; i < vocab_size; ++i) {
    if (!reader.ReadLine(&line) || line.size() < 2 || line[0] != 'V' ||
        line[1] != '\t') {
      throw fail("expected vocabulary line");
    }
    std::string token = line.substr(2);
    model.vocab_.emplace(token, static_cast<int>(model.id_to_token_.size()));
    model.id_to_token_.push_back(std::move(token));
  }
  while (reader.ReadLine(&line)) {
    if (line.empty()) continue;
    if (line.size() < 2 || line[0] != 'C' || line[1] != '\t') {
      throw fail("expected count line");
    }
    size_t tab = line.find('\t', 2);
    if (tab == std::string::npos) throw fail("malformed count line");
    uint64_t count = std::stoull(line.substr(2, tab - 2));
    std::vector<int> gram;
    std::stringstream toks(line.substr(tab + 1));
    std::string tok;
    while (toks >> tok) {
      int id = model.TokenId(tok);
      if (id < 0) throw fail("count line references unknown token");
      gram.push_back(id);
    }
    if (gram.empty() || gram.size() > static_cast<size_t>(model.order_)) {
      throw fail("count line with bad gram length");
    }
    int m = static_cast<int>(gram.size()) - 1;
    model.grams_[m][gram] = count;
    std::vector<int> prefix(gram.begin(), gram.end() - 1);
    model.contexts_[m][prefix] += count;
  }
  if (model.grams_[0].empty()) throw fail("model has no unigram counts");
  return model;
}

// ---------------------------------------------------------------------------
// Wire protocol
// ---------------------------------------------------------------------------

std::string SerializeScoreRequest(const ScoreRequest &request) {
  json out = json::object();
  out["id"] = request.id;
  out["tokens"] = request.tokens;
  out["mask"] = json::array({request.begin, request.end});
  return out.dump();
}

ScoreRequest ParseScoreRequest(const std::string &line) {
  json obj;
  try {
    obj = json::parse(line);
  } catch (const json::parse_error &e) {
    throw ScorerProtocolError(std::string("bad request line: ") + e.what());
  }
  if (!obj.is_object() || !obj.contains("id") || !obj["id"].is_string() ||
      !obj.contains("tokens") || !obj["tokens"].is_array() ||
      !obj.contains("mask") || !obj["mask"].is_array() ||
      obj["mask"].size() != 2) {
    throw ScorerProtocolError("bad request line: missing or mistyped field");
  }
  ScoreRequest request;
  request.id = obj["id"].get<std::string>();
  for (const json &t : obj["tokens"]) {
    if (!t.is_string()) throw ScorerProtocolError("bad request token");
    request.tokens.push_back(t.get<std::string>());
  }
  if (!obj["mask"][0].is_number_integer() ||
      !obj["mask"][1].is_number_integer()) {
    throw ScorerProtocolError("bad request mask");
  }
  int64_t begin = obj["mask"][0].get<int64_t>();
  int64_t end = obj["mask"][1].get<int64_t>();
  if (begin < 0 || end < begin ||
      static_cast<size_t>(end) > request.tokens.size()) {
    throw ScorerProtocolError("request mask out of range");
  }
  request.begin = static_cast<size_t>(begin);
  request.end = static_cast<size_t>(end);
  return request;
}

std::string SerializeScoreResponse(const ScoreResponse &response) {
  json out = json::object();
  out["id"] = response.id;
  out["logprobs"] = response.logprobs;
  return out.dump();
}

ScoreResponse ParseScoreResponse(const std::string &line) {
  json obj;
  try {
    obj = json::parse(line);
  } catch (const json::parse_error &e) {
    throw ScorerProtocolError(std::string("bad response line: ") + e.what());
  }
  if (!obj.is_object() || !obj.contains("id") || !obj["id"].is_string() ||
      !obj.contains("logprobs") || !obj["logprobs"].is_array()) {
    throw ScorerProtocolError("bad response line: missing or mistyped field");
  }
  ScoreResponse response;
  response.id = obj["id"].get<std::string>();
  for (const json &v : obj["logprobs"]) {
    if (!v.is_number()) throw ScorerProtocolError("bad response logprob");
    double value = v.get<double>();
    if (!std::isfinite(value) || value > 0.0) {
      throw ScorerProtocolError(
          "response logprob must be finite and <= 0, got " +
          std::to_string(value));
    }
    response.logprobs.push_back(value);
  }
  return response;
}

// ---------------------------------------------------------------------------
// Transports
// ---------------------------------------------------------------------------

namespace {

void IgnoreSigpipeOnce() {
  static const bool done = [] {
    ::signal(SIGPIPE, SIG_IGN);
    return true;
  }();
  (void)done;
}

// Newline-framed reads and writes over a pair of file descriptors.
class FdTransport : public LineTransport {
 public:
  FdTransport(int read_fd, int write_fd, pid_t child = -1)
      : read_fd_(read_fd), write_fd_(write_fd), child_(child) {
    IgnoreSigpipeOnce();
  }

  ~FdTransport() override {
    if (write_fd_ >= 0) ::close(write_fd_);
    if (read_fd_ >= 0 && read_fd_ != write_fd_) ::close(read_fd_);
    if (child_ > 0) {
      int status = 0;
      if (::waitpid(child_, &status, WNOHANG) == 0) {
        ::kill(child_, SIGKILL);
        ::waitpid(child_, &status, 0);
      }
    }
  }

  void SendLine(const std::string &line) override {
    std::string framed = line + "\n";
    size_t sent = 0;
    while (sent < framed.size()) {
      ssize_t n = ::write(write_fd_, framed.data() + sent, framed.size() - sent);
      if (n < 0) {
        if (errno == EINTR) continue;
        throw ScorerProtocolError(std::string("write to scorer failed: ") +
                                  std::strerror(errno));
      }
      sent += static_cast<size_t>(n);
    }
  }

  std::optional<std::string> RecvLine(int timeout_ms) override {
    while (true) {
      size_t nl = buffer_.find('\n');
      if (nl != std::string::npos) {
        std::string line = buffer_.substr(0, nl);
        buffer_.erase(0, nl + 1);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        return line;
      }
      if (closed_) {
        if (buffer_.empty()) return std::nullopt;
        std::string line = buffer_;
        buffer_.clear();
        return line;
      }
      struct pollfd pfd;
      pfd.fd = read_fd_;
      pfd.events = POLLIN;
      int rc = ::poll(&pfd, 1, timeout_ms);
      if (rc < 0) {
        if (errno == EINTR) continue;
        throw ScorerProtocolError(std::string("poll on scorer failed: ") +
                                  std::strerror(errno));
      }
      if (rc == 0) throw ScorerTimeout("timed out waiting for scorer response");
      char chunk[4096];
      ssize_t n = ::read(read_fd_, chunk, sizeof(chunk));
      if (n < 0) {
        if (errno == EINTR) continue;
        throw ScorerProtocolError(std::string("read from scorer failed: ") +
                                  std::strerror(errno));
      }
      if (n == 0) {
        closed_ = true;
        continue;
      }
      buffer_.append(chunk, static_cast<size_t>(n));
    }
  }

 private:
  int read_fd_;
  int write_fd_;
  pid_t child_;
  std::string buffer_;
  bool closed_ = false;
};

}  // namespace

std::unique_ptr<LineTransport> MakeProcessTransport(
    const std::vector<std::string> &argv) {
  if (argv.empty()) throw ScorerError("empty scorer command");
  int to_child[2];
  int from_child[2];
  if (::pipe(to_child) != 0 || ::pipe(from_child) != 0) {
    throw ScorerError(std::string("pipe failed: ") + std::strerror(errno));
  }
  pid_t pid = ::fork();
  if (pid < 0) {
    throw ScorerError(std::string("fork failed: ") + std::strerror(errno));
  }
  if (pid == 0) {
    ::dup2(to_child[0], STDIN_FILENO);
    ::dup2(from_child[1], STDOUT_FILENO);
    ::close(to_child[0]);
    ::close(to_child[1]);
    ::close(from_child[0]);
    ::close(from_child[1]);
    std::vector<char *> args;
    for (const std::string &arg : argv) {
      args.push_back(const_cast<char *>(arg.c_str()));
    }
    args.push_back(nullptr);
    ::execvp(args[0], args.data());
    ::perror("execvp");
    ::_exit(127);
  }
  ::close(to_child[0]);
  ::close(from_child[1]);
  return std::make_unique<FdTransport>(from_child[0], to_child[1], pid);
}

std::unique_ptr<LineTransport> MakeTcpTransport(const std::string &host,
                                                int port) {
  struct addrinfo hints;
  std::memset(&hints, 0, sizeof(hints));
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  struct addrinfo *result = nullptr;
  std::string service = std::to_string(port);
  int rc = ::getaddrinfo(host.c_str(), service.c_str(), &hints, &result);
  if (rc != 0) {
    throw ScorerError("cannot resolve " + host + ": " + gai_strerror(rc));
  }
  int fd = -1;
  for (struct addrinfo *ai = result; ai != nullptr; ai = ai->ai_next) {
    fd = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
    if (fd < 0) continue;
    if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0) break;
    ::close(fd);
    fd = -1;
  }
  ::freeaddrinfo(result);
  if (fd < 0) {
    throw ScorerError("cannot connect to " + host + ":" + service);
  }
  return std::make_unique<FdTransport>(fd, fd);
}

// ---------------------------------------------------------------------------
// External scorer
// ---------------------------------------------------------------------------

ExternalScorer::ExternalScorer(std::unique_ptr<LineTransport> transport,
                               int timeout_ms, const std::string &label)
    : transport_(std::move(transport)),
      timeout_ms_(timeout_ms),
      label_(label) {}

std::string ExternalScorer::name() const { return label_; }

std::vector<ScoreResponse> ExternalScorer::ScoreBatch(
    const std::vector<ScoreRequest> &requests) const {
  std::map<std::string, size_t> index_of;
  for (size_t i = 0; i < requests.size(); ++i) {
    if (!index_of.emplace(requests[i].id, i).second) {
      throw ScorerError("duplicate request id " + requests[i].id);
    }
    transport_->SendLine(SerializeScoreRequest(requests[i]));
  }
  std::vector<ScoreResponse> responses(requests.size());
  std::set<std::string> outstanding;
  for (const ScoreRequest &request : requests) outstanding.insert(request.id);
  while (!outstanding.empty()) {
    std::optional<std::string> line = transport_->RecvLine(timeout_ms_);
    if (!line) {
      throw ScorerProtocolError(
          "scorer stream closed with " + std::to_string(outstanding.size()) +
          " responses outstanding");
    }
    ScoreResponse response = ParseScoreResponse(*line);
    auto it = index_of.find(response.id);
    if (it == index_of.end()) {
      throw ScorerIdMismatch("response for unknown request id \"" +
                             response.id + "\"");
    }
    if (outstanding.erase(response.id) == 0) {
      throw ScorerIdMismatch("duplicate response for request id \"" +
                             response.id + "\"");
    }
    const ScoreRequest &request = requests[it->second];
    size_t expected = request.end - request.begin;
    if (response.logprobs.size() != expected) {
      throw ScorerLengthMismatch(
          "request " + response.id + " expected " + std::to_string(expected) +
          " logprobs, got " + std::to_string(response.logprobs.size()));
    }
    responses[it->second] = std::move(response);
  }
  return responses;
}

std::vector<double> ExternalScorer::SpanLogProbs(
    const std::vector<std::string> &tokens, size_t begin, size_t end) const {
  if (begin > end || end > tokens.size()) {
    throw ScorerError("span out of range");
  }
  ScoreRequest request;
  request.id = "r" + std::to_string(next_id_++);
  request.tokens = tokens;
  request.begin = begin;
  request.end = end;
  std::vector<ScoreResponse> responses = ScoreBatch({request});
  return responses.at(0).logprobs;
}

}  // namespace sanipipe
