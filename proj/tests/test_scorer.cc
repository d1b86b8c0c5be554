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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>
#include <set>

#include "sanipipe/io.h"
#include "sanipipe/scorer.h"
#include "sanipipe/text.h"
#include "testutil.hpp"

using namespace sanipipe;
using namespace sanipipe::testutil;

namespace {

// Path of the line-protocol helper binary, injected by the build.
const char *kFixtureScorer = SANIPIPE_FIXTURE_SCORER;

ExternalScorer SpawnScorer(const std::vector<std::string> &extra_args,
                           int timeout_ms = 5000) {
  std::vector<std::string> argv = {kFixtureScorer};
  argv.insert(argv.end(), extra_args.begin(), extra_args.end());
  return ExternalScorer(MakeProcessTransport(argv), timeout_ms);
}

}  // namespace

TEST_CASE("deterministic continuation scores log probability zero") {
  // In "a b a b" with order 2 and no smoothing, b always follows a.
  NGramScorer model = NGramScorer::Train({"a b a b"}, 2, 0.0);
  CHECK(model.CondProb({"a"}, "b") == doctest::Approx(1.0));
  std::vector<double> lp = model.SpanLogProbs({"a", "b"}, 1, 2);
  REQUIRE(lp.size() == 1);
  CHECK(lp[0] == doctest::Approx(0.0));
  // And the information content of a certain token is zero.
  CHECK(TokenInformationContent(model, {"a", "b"}, 1) == doctest::Approx(0.0));
}

TEST_CASE("add k smoothing matches the closed form") {
  // Corpus "a b a c": after "a" we saw b once, c once. With k = 0.5 and
  // vocabulary {a, b, c} (+UNK class, so V+1 = 4):
  //   P(b|a) = (1 + 0.5) / (2 + 0.5 * 4) = 1.5 / 4
  NGramScorer model = NGramScorer::Train({"a b a c"}, 2, 0.5);
  CHECK(model.vocab_size() == 3);
  CHECK(model.CondProb({"a"}, "b") == doctest::Approx(1.5 / 4.0));
  CHECK(model.CondProb({"a"}, "c") == doctest::Approx(1.5 / 4.0));
  CHECK(model.CondProb({"a"}, "a") == doctest::Approx(0.5 / 4.0));
  // Unknown token falls into the UNK class.
  CHECK(model.CondProb({"a"}, "zzz") == doctest::Approx(0.5 / 4.0));
  // A span token that is masked elsewhere: scoring "zzz" after "a".
  std::vector<double> lp = model.SpanLogProbs({"a", "zzz"}, 1, 2);
  CHECK(lp[0] == doctest::Approx(std::log(0.5 / 4.0)));
}

TEST_CASE("unseen history backs off to shorter context") {
  // "x" never appears, so history ["x"] is unseen and P(a|x) backs off to the
  // unigram P(a) = (2 + 0.1) / (4 + 0.1 * 4).
  NGramScorer model = NGramScorer::Train({"a b a c"}, 2, 0.1);
  double unigram_a = (2 + 0.1) / (4 + 0.1 * 4);
  CHECK(model.CondProb({"xx"}, "a") == doctest::Approx(unigram_a));
}

TEST_CASE("conditional distribution sums to one") {
  std::vector<std::string> vocab = {"red", "green", "blue", "dog", "cat"};
  std::mt19937_64 rng(5);
  std::vector<std::string> texts;
  for (int i = 0; i < 5; ++i) texts.push_back(RandomText(rng, vocab, 5, 40));
  NGramScorer model = NGramScorer::Train(texts, 3, 0.1);

  // The model's vocabulary is the token set of the training texts, which
  // includes any punctuation the sampler sprinkled in.
  std::set<std::string> types;
  for (const std::string &text : texts) {
    for (const Token &token : Tokenize(text)) types.insert(token.surface);
  }
  CHECK(model.vocab_size() == types.size());

  for (int trial = 0; trial < 100; ++trial) {
    std::vector<std::string> history;
    size_t len = rng() % 3;
    for (size_t i = 0; i < len; ++i) {
      // Mix seen and unseen history tokens.
      history.push_back(rng() % 4 == 0 ? "unseen-token"
                                       : vocab[rng() % vocab.size()]);
    }
    double total = 0;
    for (const std::string &v : types) total += model.CondProb(history, v);
    total += model.CondProb(history, "some-other-unknown");  // UNK class
    CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("all logprobs are finite and nonpositive with smoothing") {
  NGramScorer model = NGramScorer::Train({"one two three two one"}, 3, 0.1);
  std::vector<std::string> tokens = {"zzz", "one", "qqq", "three", "two"};
  std::vector<double> lp = model.SpanLogProbs(tokens, 0, tokens.size());
  REQUIRE(lp.size() == tokens.size());
  for (double v : lp) {
    CHECK(std::isfinite(v));
    CHECK(v <= 0.0);
  }
}

TEST_CASE("training on an empty corpus fails") {
  CHECK_THROWS_AS(NGramScorer::Train({}, 3, 0.1), ScorerError);
  CHECK_THROWS_AS(NGramScorer::Train({"", "   "}, 3, 0.1), ScorerError);
}

TEST_CASE("model file round trips scores and bytes") {
  TempDir dir;
  NGramScorer model =
      NGramScorer::Train({"the cat sat", "the dog sat on the mat"}, 3, 0.25);
  std::string path = dir.File("model.txt");
  model.Save(path);
  NGramScorer loaded = NGramScorer::Load(path);

  CHECK(loaded.order() == model.order());
  CHECK(loaded.add_k() == model.add_k());
  CHECK(loaded.vocab_size() == model.vocab_size());
  std::vector<std::string> tokens = {"the", "cat", "sat", "on", "zzz"};
  CHECK(model.SpanLogProbs(tokens, 1, 4) == loaded.SpanLogProbs(tokens, 1, 4));

  std::string path2 = dir.File("model2.txt");
  loaded.Save(path2);
  CHECK(ReadFile(path) == ReadFile(path2));
}

TEST_CASE("span scoring masks the not yet scored span tokens") {
  // Train so that "b c" is only predictable from "a": when scoring the span
  // ["b","c"], the first position must not see the actual "c" to its right,
  // and the second position conditions on the already scored "b".
  NGramScorer model = NGramScorer::Train({"a b c a b c"}, 3, 0.1);
  std::vector<std::string> tokens = {"a", "b", "c"};
  std::vector<double> span = model.SpanLogProbs(tokens, 1, 3);
  REQUIRE(span.size() == 2);
  // Chain rule: the same values as scoring each position with true history.
  CHECK(span[0] == doctest::Approx(std::log(model.CondProb({"a"}, "b"))));
  CHECK(span[1] ==
        doctest::Approx(std::log(model.CondProb({"a", "b"}, "c"))));
}

TEST_CASE("request and response lines round trip") {
  ScoreRequest request;
  request.id = "r42";
  request.tokens = {"Mr", "Leszek", "Ko\xc5\x82odzi\xc5\x84ski"};
  request.begin = 1;
  request.end = 3;
  ScoreRequest parsed = ParseScoreRequest(SerializeScoreRequest(request));
  CHECK(parsed.id == request.id);
  CHECK(parsed.tokens == request.tokens);
  CHECK(parsed.begin == request.begin);
  CHECK(parsed.end == request.end);

  ScoreResponse response;
  response.id = "r42";
  response.logprobs = {-1.25, -0.5};
  ScoreResponse back = ParseScoreResponse(SerializeScoreResponse(response));
  CHECK(back.id == response.id);
  CHECK(back.logprobs == response.logprobs);

  // Positive or non-finite logprobs are protocol violations.
  CHECK_THROWS_AS(ParseScoreResponse(R"({"id":"x","logprobs":[0.5]})"),
                  ScorerProtocolError);
  CHECK_THROWS_AS(ParseScoreResponse(R"({"id":"x","logprobs":["n"]})"),
                  ScorerProtocolError);
  CHECK_THROWS_AS(ParseScoreRequest(R"({"id":"x","tokens":["a"],"mask":[1,0]})"),
                  ScorerProtocolError);
}

TEST_CASE("external scorer resolves responses") {
  ExternalScorer scorer = SpawnScorer({"--value", "-2.5"});
  std::vector<std::string> tokens = {"a", "b", "c", "d"};
  std::vector<double> lp = scorer.SpanLogProbs(tokens, 1, 3);
  CHECK(lp == std::vector<double>{-2.5, -2.5});
}

TEST_CASE("external scorer demultiplexes out of order responses") {
  // The helper buffers 3 requests and answers them in reverse order.
  ExternalScorer scorer = SpawnScorer({"--reverse", "3", "--value", "-1.0"});
  std::vector<ScoreRequest> batch;
  for (int i = 0; i < 3; ++i) {
    ScoreRequest r;
    r.id = "q" + std::to_string(i);
    r.tokens = {"t0", "t1", "t2", "t3"};
    r.begin = 0;
    r.end = static_cast<size_t>(i) + 1;  // distinct lengths
    batch.push_back(r);
  }
  std::vector<ScoreResponse> responses = scorer.ScoreBatch(batch);
  REQUIRE(responses.size() == 3);
  for (int i = 0; i < 3; ++i) {
    CHECK(responses[i].id == batch[i].id);
    CHECK(responses[i].logprobs.size() == batch[i].end - batch[i].begin);
  }
}

TEST_CASE("external scorer error taxonomy") {
  SUBCASE("wrong length") {
    ExternalScorer scorer = SpawnScorer({"--length-bug"});
    CHECK_THROWS_AS(scorer.SpanLogProbs({"a", "b", "c"}, 0, 2),
                    ScorerLengthMismatch);
  }
  SUBCASE("wrong id") {
    ExternalScorer scorer = SpawnScorer({"--wrong-id"});
    CHECK_THROWS_AS(scorer.SpanLogProbs({"a", "b"}, 0, 1), ScorerIdMismatch);
  }
  SUBCASE("garbage line") {
    ExternalScorer scorer = SpawnScorer({"--garbage"});
    CHECK_THROWS_AS(scorer.SpanLogProbs({"a", "b"}, 0, 1),
                    ScorerProtocolError);
  }
  SUBCASE("positive logprob") {
    ExternalScorer scorer = SpawnScorer({"--positive"});
    CHECK_THROWS_AS(scorer.SpanLogProbs({"a", "b"}, 0, 1),
                    ScorerProtocolError);
  }
  SUBCASE("timeout") {
    ExternalScorer scorer = SpawnScorer({"--hang"}, 300);
    CHECK_THROWS_AS(scorer.SpanLogProbs({"a", "b"}, 0, 1), ScorerTimeout);
  }
}

TEST_CASE("token information content floors at zero") {
  // ConstScorer at -2 gives weight 2; a hypothetical 0 logprob gives 0.
  ConstScorer two(-2.0);
  CHECK(TokenInformationContent(two, {"x"}, 0) == doctest::Approx(2.0));
  ConstScorer zero(0.0);
  CHECK(TokenInformationContent(zero, {"x"}, 0) == doctest::Approx(0.0));
}

TEST_CASE("mask placeholder is out of vocabulary by construction") {
  NGramScorer model = NGramScorer::Train({"a b c"}, 2, 0.1);
  // The mask token never enters the vocabulary even if a raw text contained
  // it; scoring it equals scoring any unknown token.
  CHECK(model.CondProb({"a"}, kMaskToken) ==
        doctest::Approx(model.CondProb({"a"}, "unseen-token-xyz")));
}
