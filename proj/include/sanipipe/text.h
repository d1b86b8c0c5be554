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

#ifndef SANIPIPE_TEXT_H_
#define SANIPIPE_TEXT_H_

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

// Low-level text utilities shared by the whole pipeline. All span offsets in
// this code base are Unicode code point offsets into the document text, never
// byte offsets; the helpers here do the conversions in one place.

namespace sanipipe {

// Raised on invalid UTF-8. Every path that ingests external text validates
// through decode_utf8() so downstream code can assume well-formed input.
class Utf8Error : public std::runtime_error {
 public:
  explicit Utf8Error(const std::string &msg) : std::runtime_error(msg) {}
};

// Decodes UTF-8 into code points. Throws Utf8Error on malformed input
// (truncated sequences, overlong encodings, surrogates, values > U+10FFFF).
std::u32string DecodeUTF8(std::string_view text);

// Encodes code points back to UTF-8. Inverse of DecodeUTF8.
std::string EncodeUTF8(const std::u32string &chars);

// Number of code points in a UTF-8 string.
size_t UTF8Length(std::string_view text);

// Substring by code point range [begin, end). Clamps to the text length.
std::string UTF8Substring(std::string_view text, size_t begin, size_t end);

// Whitespace per the tokenizer: ASCII space/tab/newline family plus the
// common Unicode space separators (NBSP, en/em spaces, ideographic space,
// line/paragraph separators).
bool IsSpaceChar(char32_t c);

// Word constituent for tokenization. ASCII letters and digits are word
// characters; outside ASCII everything is a word character except spaces and
// the general punctuation, symbol, and dingbat blocks. This deliberately errs
// toward treating unknown letters as word characters so that names in any
// script tokenize as single units.
bool IsWordChar(char32_t c);

// True if c is an ASCII digit.
bool IsDigitChar(char32_t c);

// Locale-independent lowercasing for the scripts that matter for the bundled
// gazetteers: ASCII, Latin-1, Latin Extended-A, Greek and Cyrillic base
// ranges. Other characters pass through unchanged.
char32_t ToLowerChar(char32_t c);

// Lowercases a UTF-8 string with ToLowerChar.
std::string LowerCopy(std::string_view text);

// A token with its code point span in the source text. surface is the UTF-8
// slice text[start:end).
struct Token {
  size_t start = 0;
  size_t end = 0;
  std::string surface;

  bool operator==(const Token &other) const = default;
};

// Splits text into tokens: maximal runs of word characters, otherwise one
// token per non-space character. Offsets are code points. Tokens never
// overlap, appear left to right, and cover every non-space character.
std::vector<Token> Tokenize(std::string_view text);

// 64-bit FNV-1a over the bytes of data. Used for hashed text features.
uint64_t Fnv1a64(std::string_view data);

// Collapses every run of whitespace to a single ASCII space and trims the
// ends. Works on UTF-8 input and uses the tokenizer's space set.
std::string CollapseWhitespace(std::string_view text);

}  // namespace sanipipe

#endif  // SANIPIPE_TEXT_H_
