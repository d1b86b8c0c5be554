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

#ifndef SANIPIPE_IO_H_
#define SANIPIPE_IO_H_

#include <cstdio>
#include <memory>
#include <stdexcept>
#include <string>

namespace sanipipe {

class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string &msg) : std::runtime_error(msg) {}
};

// Streaming line reader over a plain or gzip file. Gzip is detected from the
// 1f 8b magic bytes, not the file name. Memory use is bounded by the inflate
// window plus the longest line, independent of file size, so multi-gigabyte
// dumps can be scanned without loading them.
class LineReader {
 public:
  explicit LineReader(const std::string &path);
  ~LineReader();

  LineReader(const LineReader &) = delete;
  LineReader &operator=(const LineReader &) = delete;

  // Reads the next line without its trailing newline. A trailing carriage
  // return is stripped too. Returns false at end of input.
  bool ReadLine(std::string *line);

  // 1-based number of the line most recently returned.
  size_t line_number() const { return line_number_; }

  const std::string &path() const { return path_; }

 private:
  bool FillBuffer();

  std::string path_;
  FILE *file_ = nullptr;
  bool gzip_ = false;
  void *zstream_ = nullptr;  // z_stream when gzip_
  std::string raw_;          // compressed input buffer
  size_t raw_pos_ = 0;
  std::string buffer_;       // decoded bytes not yet handed out
  size_t buffer_pos_ = 0;
  bool eof_ = false;
  size_t line_number_ = 0;
};

// Reads a whole file into a string. Throws IoError when the file cannot be
// opened or read.
std::string ReadFile(const std::string &path);

// Writes data to path, replacing any previous content. Throws IoError on
// failure.
void WriteFile(const std::string &path, const std::string &data);

// True if path names an existing regular file.
bool FileExists(const std::string &path);

}  // namespace sanipipe

#endif  // SANIPIPE_IO_H_
