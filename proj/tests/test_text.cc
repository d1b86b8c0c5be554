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

#include <random>

#include "sanipipe/text.h"

using namespace sanipipe;

TEST_CASE("utf8 decode encode round trip") {
  std::string text = "Mr Leszek Ko\xc5\x82odzi\xc5\x84ski \xe2\x82\xac \xf0\x9f\x99\x82";
  std::u32string chars = DecodeUTF8(text);
  CHECK(EncodeUTF8(chars) == text);
  CHECK(UTF8Length(text) == chars.size());
}

TEST_CASE("utf8 rejects malformed input") {
  CHECK_THROWS_AS(DecodeUTF8("\x80"), Utf8Error);            // lone continuation
  CHECK_THROWS_AS(DecodeUTF8("\xc3"), Utf8Error);            // truncated
  CHECK_THROWS_AS(DecodeUTF8("\xc0\xaf"), Utf8Error);        // overlong '/'
  CHECK_THROWS_AS(DecodeUTF8("\xe0\x80\xaf"), Utf8Error);    // overlong, 3 bytes
  CHECK_THROWS_AS(DecodeUTF8("\xed\xa0\x80"), Utf8Error);    // surrogate D800
  CHECK_THROWS_AS(DecodeUTF8("\xf4\x90\x80\x80"), Utf8Error);  // > U+10FFFF
  CHECK_THROWS_AS(DecodeUTF8("\xc3(a"), Utf8Error);          // bad continuation
}

TEST_CASE("utf8 substring uses code points and clamps") {
  std::string text = "a\xc5\x82" "b";  // a ł b
  CHECK(UTF8Substring(text, 0, 2) == "a\xc5\x82");
  CHECK(UTF8Substring(text, 1, 2) == "\xc5\x82");
  CHECK(UTF8Substring(text, 2, 99) == "b");
  CHECK(UTF8Substring(text, 7, 9).empty());
}

TEST_CASE("tokenizer splits word runs and single punctuation") {
  auto surfaces = [](const std::vector<Token> &tokens) {
    std::vector<std::string> out;
    for (const Token &t : tokens) out.push_back(t.surface);
    return out;
  };

  CHECK(surfaces(Tokenize("Mr Leszek Ko\xc5\x82odzi\xc5\x84ski")) ==
        std::vector<std::string>{"Mr", "Leszek", "Ko\xc5\x82odzi\xc5\x84ski"});
  CHECK(surfaces(Tokenize("36244/06")) ==
        std::vector<std::string>{"36244", "/", "06"});
  CHECK(Tokenize("").empty());
  CHECK(Tokenize(" \t\n").empty());
  CHECK(surfaces(Tokenize("a,b")) == std::vector<std::string>{"a", ",", "b"});
  // Non-breaking space separates tokens.
  CHECK(surfaces(Tokenize("a\xc2\xa0także")) ==
        std::vector<std::string>{"a", "tak\xc5\xbc" "e"});
}

TEST_CASE("tokenizer covers the text without overlaps") {
  std::vector<std::string> vocab = {"alpha", "b2", "Koło", "x", "36244/06",
                                    ",.;", "  ", "\xc2\xa0", "(y)"};
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 300; ++trial) {
    std::string text;
    size_t pieces = rng() % 12;
    for (size_t i = 0; i < pieces; ++i) text += vocab[rng() % vocab.size()];
    std::vector<Token> tokens = Tokenize(text);
    std::u32string chars = DecodeUTF8(text);
    std::vector<bool> covered(chars.size(), false);
    size_t prev_end = 0;
    for (const Token &t : tokens) {
      REQUIRE(t.start >= prev_end);  // sorted, non-overlapping
      REQUIRE(t.start < t.end);
      REQUIRE(t.end <= chars.size());
      CHECK(UTF8Substring(text, t.start, t.end) == t.surface);
      for (size_t c = t.start; c < t.end; ++c) covered[c] = true;
      prev_end = t.end;
    }
    for (size_t c = 0; c < chars.size(); ++c) {
      // Every skipped character is whitespace, every covered one is not.
      CHECK(covered[c] == !IsSpaceChar(chars[c]));
    }
  }
}

TEST_CASE("lowercasing covers the bundled scripts") {
  CHECK(ToLowerChar(U'A') == U'a');
  CHECK(ToLowerChar(U'z') == U'z');
  CHECK(ToLowerChar(U'7') == U'7');
  CHECK(ToLowerChar(0x00C0) == 0x00E0);  // À -> à
  CHECK(ToLowerChar(0x00D7) == 0x00D7);  // multiplication sign unchanged
  CHECK(ToLowerChar(0x0141) == 0x0142);  // Ł -> ł
  CHECK(ToLowerChar(0x0104) == 0x0105);  // Ą -> ą
  CHECK(ToLowerChar(0x0178) == 0x00FF);  // Ÿ -> ÿ
  CHECK(ToLowerChar(0x0391) == 0x03B1);  // Α -> α
  CHECK(ToLowerChar(0x03A9) == 0x03C9);  // Ω -> ω
  CHECK(ToLowerChar(0x0410) == 0x0430);  // А -> а
  CHECK(ToLowerChar(0x0401) == 0x0451);  // Ё -> ё
  CHECK(LowerCopy("Ko\xc5\x81odzi\xc5\x83SKI") ==
        "ko\xc5\x82odzi\xc5\x84ski");
}

TEST_CASE("space classification") {
  for (char32_t c : {U' ', U'\t', U'\n', U'\r', char32_t{0x00A0},
                     char32_t{0x2003}, char32_t{0x3000}, char32_t{0x2028}}) {
    CHECK(IsSpaceChar(c));
    CHECK_FALSE(IsWordChar(c));
  }
  CHECK_FALSE(IsSpaceChar(U'a'));
  CHECK(IsWordChar(U'a'));
  CHECK(IsWordChar(U'9'));
  CHECK(IsWordChar(0x0142));   // ł
  CHECK(IsWordChar(0x4E2D));   // CJK ideograph
  CHECK_FALSE(IsWordChar(U'/'));
  CHECK_FALSE(IsWordChar(U','));
  CHECK_FALSE(IsWordChar(0x2013));  // en dash
  CHECK_FALSE(IsWordChar(0x20AC));  // euro sign
}

TEST_CASE("fnv1a64 known vectors") {
  // Published reference values for the 64-bit FNV-1a function.
  CHECK(Fnv1a64("") == UINT64_C(0xcbf29ce484222325));
  CHECK(Fnv1a64("a") == UINT64_C(0xaf63dc4c8601ec8c));
  CHECK(Fnv1a64("foobar") == UINT64_C(0x85944171f73967e8));
}

TEST_CASE("collapse whitespace") {
  CHECK(CollapseWhitespace("  a \t\n b  ") == "a b");
  CHECK(CollapseWhitespace("a\xc2\xa0\xc2\xa0" "b") == "a b");
  CHECK(CollapseWhitespace("") == "");
  CHECK(CollapseWhitespace(" \n ") == "");
  CHECK(CollapseWhitespace("solo") == "solo");
}
