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

#include "sanipipe/io.h"

#include <sys/stat.h>
#include <zlib.h>

#include <cerrno>
#include <cstring>

namespace sanipipe {

namespace {
constexpr size_t kChunk = 1 << 16;
}  // namespace

LineReader::LineReader(const std::string &path) : path_(path) {
  file_ = std::fopen(path.c_str(), "rb");
  if (file_ == nullptr) {
    throw IoError("cannot open " + path + ": " + std::strerror(errno));
  }
  int c0 = std::fgetc(file_);
  int c1 = std::fgetc(file_);
  gzip_ = (c0 == 0x1f && c1 == 0x8b);
  std::rewind(file_);
  if (gzip_) {
    z_stream *zs = new z_stream();
    std::memset(zs, 0, sizeof(*zs));
    // 15 + 32 enables zlib and gzip header auto-detection.
    if (inflateInit2(zs, 15 + 32) != Z_OK) {
      delete zs;
      std::fclose(file_);
      file_ = nullptr;
      throw IoError("cannot initialize zlib for " + path);
    }
    zstream_ = zs;
    raw_.resize(kChunk);
    raw_pos_ = raw_.size();
  }
}

LineReader::~LineReader() {
  if (zstream_ != nullptr) {
    inflateEnd(static_cast<z_stream *>(zstream_));
    delete static_cast<z_stream *>(zstream_);
  }
  if (file_ != nullptr) std::fclose(file_);
}

bool LineReader::FillBuffer() {
  if (buffer_pos_ > 0) {
    buffer_.erase(0, buffer_pos_);
    buffer_pos_ = 0;
  }
  if (eof_) return false;
  if (!gzip_) {
    char chunk[kChunk];
    size_t got = std::fread(chunk, 1, sizeof(chunk), file_);
    if (got == 0) {
      if (std::ferror(file_)) throw IoError("read error on " + path_);
      eof_ = true;
      return false;
    }
    buffer_.append(chunk, got);
    return true;
  }
  z_stream *zs = static_cast<z_stream *>(zstream_);
  char out[kChunk];
  while (true) {
    if (raw_pos_ == raw_.size()) {
      size_t got = std::fread(raw_.data(), 1, raw_.size(), file_);
      if (got == 0) {
        if (std::ferror(file_)) throw IoError("read error on " + path_);
        eof_ = true;
        return false;
      }
      raw_pos_ = 0;
      if (got < raw_.size()) raw_.resize(got);
    }
    zs->next_in = reinterpret_cast<Bytef *>(raw_.data() + raw_pos_);
    zs->avail_in = static_cast<uInt>(raw_.size() - raw_pos_);
    zs->next_out = reinterpret_cast<Bytef *>(out);
    zs->avail_out = sizeof(out);
    int rc = inflate(zs, Z_NO_FLUSH);
    raw_pos_ = raw_.size() - zs->avail_in;
    if (rc != Z_OK && rc != Z_STREAM_END && rc != Z_BUF_ERROR) {
      throw IoError("corrupt gzip stream in " + path_);
    }
    size_t produced = sizeof(out) - zs->avail_out;
    if (produced > 0) buffer_.append(out, produced);
    if (rc == Z_STREAM_END) {
      // Support concatenated gzip members.
      if (inflateReset2(zs, 15 + 32) != Z_OK) {
        throw IoError("zlib reset failed for " + path_);
      }
      if (produced > 0) return true;
      continue;
    }
    if (produced > 0) return true;
  }
}

bool LineReader::ReadLine(std::string *line) {
  while (true) {
    size_t nl = buffer_.find('\n', buffer_pos_);
    if (nl != std::string::npos) {
      size_t len = nl - buffer_pos_;
      if (len > 0 && buffer_[nl - 1] == '\r') --len;
      line->assign(buffer_, buffer_pos_, len);
      buffer_pos_ = nl + 1;
      ++line_number_;
      return true;
    }
    if (!FillBuffer()) {
      if (buffer_pos_ < buffer_.size()) {
        size_t len = buffer_.size() - buffer_pos_;
        if (len > 0 && buffer_.back() == '\r') --len;
        line->assign(buffer_, buffer_pos_, len);
        buffer_pos_ = buffer_.size();
        ++line_number_;
        return true;
      }
      return false;
    }
  }
}

std::string ReadFile(const std::string &path) {
  FILE *f = std::fopen(path.c_str(), "rb");
  if (f == nullptr) {
    throw IoError("cannot open " + path + ": " + std::strerror(errno));
  }
  std::string data;
  char chunk[kChunk];
  size_t got;
  while ((got = std::fread(chunk, 1, sizeof(chunk), f)) > 0) {
    data.append(chunk, got);
  }
  bool bad = std::ferror(f) != 0;
  std::fclose(f);
  if (bad) throw IoError("read error on " + path);
  return data;
}

void WriteFile(const std::string &path, const std::string &data) {
  FILE *f = std::fopen(path.c_str(), "wb");
  if (f == nullptr) {
    throw IoError("cannot open " + path + " for writing: " +
                  std::strerror(errno));
  }
  size_t put = std::fwrite(data.data(), 1, data.size(), f);
  bool bad = put != data.size();
  if (std::fclose(f) != 0) bad = true;
  if (bad) throw IoError("write error on " + path);
}

bool FileExists(const std::string &path) {
  struct stat st;
  return ::stat(path.c_str(), &st) == 0 && S_ISREG(st.st_mode);
}

}  // namespace sanipipe
