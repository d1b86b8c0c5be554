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

#include "sanipipe/text.h"

#include <array>

namespace sanipipe {

std::u32string DecodeUTF8(std::string_view text) {
  std::u32string out;
  out.reserve(text.size());
  size_t i = 0;
  const size_t n = text.size();
  while (i < n) {
    unsigned char b0 = static_cast<unsigned char>(text[i]);
    char32_t cp = 0;
    size_t len = 0;
    if (b0 < 0x80) {
      cp = b0;
      len = 1;
    } else if ((b0 & 0xE0) == 0xC0) {
      cp = b0 & 0x1F;
      len = 2;
    } else if ((b0 & 0xF0) == 0xE0) {
      cp = b0 & 0x0F;
      len = 3;
    } else if ((b0 & 0xF8) == 0xF0) {
      cp = b0 & 0x07;
      len = 4;
    } else {
      throw Utf8Error("invalid UTF-8 lead byte at offset " + std::to_string(i));
    }
    if (i + len > n) {
      throw Utf8Error("truncated UTF-8 sequence at offset " + std::to_string(i));
    }
    for (size_t k = 1; k < len; ++k) {
      unsigned char bk = static_cast<unsigned char>(text[i + k]);
      if ((bk & 0xC0) != 0x80) {
        throw Utf8Error("invalid UTF-8 continuation byte at offset " +
                        std::to_string(i + k));
      }
      cp = (cp << 6) | (bk & 0x3F);
    }
    // Reject overlong encodings, surrogates and out-of-range values.
    static constexpr std::array<char32_t, 5> kMin = {0, 0, 0x80, 0x800, 0x10000};
    if (len > 1 && cp < kMin[len]) {
      throw Utf8Error("overlong UTF-8 encoding at offset " + std::to_string(i));
    }
    if (cp >= 0xD800 && cp <= 0xDFFF) {
      throw Utf8Error("UTF-8 encoded surrogate at offset " + std::to_string(i));
    }
    if (cp > 0x10FFFF) {
      throw Utf8Error("code point out of range at offset " + std::to_string(i));
    }
    out.push_back(cp);
    i += len;
  }
  return out;
}

std::string EncodeUTF8(const std::u32string &chars) {
  std::string out;
  out.reserve(chars.size());
  for (char32_t cp : chars) {
    if (cp < 0x80) {
      out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
      out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
      out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
      out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
      out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
      out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
      out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
  }
  return out;
}

size_t UTF8Length(std::string_view text) {
  return DecodeUTF8(text).size();
}

std::string UTF8Substring(std::string_view text, size_t begin, size_t end) {
  std::u32string chars = DecodeUTF8(text);
  if (begin > chars.size()) begin = chars.size();
  if (end > chars.size()) end = chars.size();
  if (begin >= end) return std::string();
  return EncodeUTF8(chars.substr(begin, end - begin));
}

bool IsSpaceChar(char32_t c) {
  switch (c) {
    case U' ': case U'\t': case U'\n': case U'\r':
    case 0x0B: case 0x0C:
    case 0x85:          // next line
    case 0xA0:          // no-break space
    case 0x1680:        // ogham space mark
    case 0x2028:        // line separator
    case 0x2029:        // paragraph separator
    case 0x202F:        // narrow no-break space
    case 0x205F:        // medium mathematical space
    case 0x3000:        // ideographic space
      return true;
    default:
      return c >= 0x2000 && c <= 0x200A;  // en quad .. hair space
  }
}

bool IsWordChar(char32_t c) {
  if (c < 0x80) {
    return (c >= U'0' && c <= U'9') || (c >= U'a' && c <= U'z') ||
           (c >= U'A' && c <= U'Z');
  }
  if (IsSpaceChar(c)) return false;
  // General punctuation, superscripts, currency, combining marks for symbols,
  // letterlike block is kept, arrows through dingbats are not.
  if (c >= 0x2000 && c <= 0x206F) return false;   // general punctuation
  if (c >= 0x20A0 && c <= 0x20CF) return false;   // currency symbols
  if (c >= 0x2190 && c <= 0x2BFF) return false;   // arrows .. misc symbols
  if (c >= 0x3001 && c <= 0x303F) return false;   // CJK punctuation
  if (c >= 0xFE30 && c <= 0xFE4F) return false;   // CJK compat forms
  if (c >= 0xFF01 && c <= 0xFF0F) return false;   // fullwidth punctuation
  if (c >= 0xFF1A && c <= 0xFF20) return false;
  if (c >= 0xFF3B && c <= 0xFF40) return false;
  if (c >= 0xFF5B && c <= 0xFF65) return false;
  switch (c) {
    case 0xA1: case 0xA6: case 0xA7: case 0xAB: case 0xB6: case 0xB7:
    case 0xBB: case 0xBF:           // Latin-1 punctuation
    case 0x37E: case 0x387:         // Greek question mark, ano teleia
    case 0x589: case 0x5C3:         // Armenian, Hebrew punctuation
    case 0x60C: case 0x61B: case 0x61F: case 0x6D4:  // Arabic punctuation
      return false;
    default:
      return true;
  }
}

bool IsDigitChar(char32_t c) { return c >= U'0' && c <= U'9'; }

char32_t ToLowerChar(char32_t c) {
  if (c >= U'A' && c <= U'Z') return c + 0x20;
  if (c >= 0xC0 && c <= 0xDE && c != 0xD7) return c + 0x20;  // Latin-1
  if (c >= 0x100 && c <= 0x137) return (c % 2 == 0) ? c + 1 : c;
  if (c >= 0x139 && c <= 0x148) return (c % 2 == 1) ? c + 1 : c;
  if (c >= 0x14A && c <= 0x177) return (c % 2 == 0) ? c + 1 : c;
  if (c == 0x178) return 0xFF;                               // Y with diaeresis
  if (c >= 0x179 && c <= 0x17E) return (c % 2 == 1) ? c + 1 : c;
  if (c >= 0x391 && c <= 0x3A9 && c != 0x3A2) return c + 0x20;  // Greek
  if (c >= 0x410 && c <= 0x42F) return c + 0x20;                // Cyrillic
  if (c >= 0x400 && c <= 0x40F) return c + 0x50;
  return c;
}

std::string LowerCopy(std::string_view text) {
  std::u32string chars = DecodeUTF8(text);
  for (char32_t &c : chars) c = ToLowerChar(c);
  return EncodeUTF8(chars);
}

std::vector<Token> Tokenize(std::string_view text) {
  std::u32string chars = DecodeUTF8(text);
  std::vector<Token> tokens;
  size_t i = 0;
  const size_t n = chars.size();
  while (i < n) {
    if (IsSpaceChar(chars[i])) {
      ++i;
      continue;
    }
    size_t start = i;
    if (IsWordChar(chars[i])) {
      while (i < n && IsWordChar(chars[i])) ++i;
    } else {
      ++i;
    }
    Token token;
    token.start = start;
    token.end = i;
    token.surface = EncodeUTF8(chars.substr(start, i - start));
    tokens.push_back(std::move(token));
  }
  return tokens;
}

uint64_t Fnv1a64(std::string_view data) {
  uint64_t hash = 0xcbf29ce484222325ULL;
  for (char ch : data) {
    hash ^= static_cast<unsigned char>(ch);
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

std::string CollapseWhitespace(std::string_view text) {
  std::u32string chars = DecodeUTF8(text);
  std::u32string out;
  out.reserve(chars.size());
  bool pending_space = false;
  for (char32_t c : chars) {
    if (IsSpaceChar(c)) {
      pending_space = !out.empty();
    } else {
      if (pending_space) out.push_back(U' ');
      pending_space = false;
      out.push_back(c);
    }
  }
  return EncodeUTF8(out);
}

}  // namespace sanipipe
