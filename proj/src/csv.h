/*
 * Copyright 2026 The memfail Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef MEMFAIL_SRC_CSV_H_
#define MEMFAIL_SRC_CSV_H_

#include <charconv>
#include <cstdint>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

#include "memfail/common.h"

namespace memfail::internal {

// Line-oriented reader for the plain comma-separated tables used by the
// toolkit. Fields never contain quotes or embedded commas.
class CsvReader {
 public:
  CsvReader(std::string path, std::vector<std::string_view> expected_header)
      : path_(std::move(path)), header_(std::move(expected_header)) {
    in_.open(path_, std::ios::binary);
    if (!in_) throw DataError(path_ + ": cannot open file");
    std::string line;
    if (!ReadLine(&line)) throw DataError(path_ + ":1: missing header row");
    Split(line);
    bool ok = fields_.size() == header_.size();
    for (std::size_t i = 0; ok && i < header_.size(); ++i) {
      ok = fields_[i] == header_[i];
    }
    if (!ok) {
      std::string want;
      for (auto h : header_) want += (want.empty() ? "" : ",") + std::string(h);
      throw DataError(path_ + ":1: header mismatch, expected '" + want + "'");
    }
  }

  // Advances to the next data row; false at end of file. Blank lines are
  // skipped.
  bool Next() {
    std::string line;
    while (ReadLine(&line)) {
      if (line.empty()) continue;
      line_buffer_ = std::move(line);
      Split(line_buffer_);
      if (fields_.size() != header_.size()) {
        throw DataError(path_ + ":" + std::to_string(line_no_) + ": expected " +
                        std::to_string(header_.size()) + " columns, got " +
                        std::to_string(fields_.size()));
      }
      return true;
    }
    return false;
  }

  std::string_view Field(std::size_t col) const { return fields_[col]; }

  std::string String(std::size_t col, bool allow_empty = true) const {
    if (!allow_empty && fields_[col].empty()) Fail(col, "empty value");
    return std::string(fields_[col]);
  }

  std::int64_t Int(std::size_t col) const {
    std::string_view f = fields_[col];
    std::int64_t v = 0;
    auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
    if (f.empty() || ec != std::errc() || ptr != f.data() + f.size()) {
      Fail(col, "not an integer: '" + std::string(f) + "'");
    }
    return v;
  }

  [[noreturn]] void Fail(std::size_t col, const std::string& what) const {
    throw DataError(path_ + ":" + std::to_string(line_no_) + ": column '" +
                    std::string(header_[col]) + "': " + what);
  }

  std::size_t line_no() const { return line_no_; }
  const std::string& path() const { return path_; }

 private:
  bool ReadLine(std::string* line) {
    if (!std::getline(in_, *line)) return false;
    ++line_no_;
    if (!line->empty() && line->back() == '\r') line->pop_back();
    return true;
  }

  void Split(std::string_view line) {
    fields_.clear();
    std::size_t start = 0;
    while (true) {
      std::size_t comma = line.find(',', start);
      if (comma == std::string_view::npos) {
        fields_.push_back(line.substr(start));
        break;
      }
      fields_.push_back(line.substr(start, comma - start));
      start = comma + 1;
    }
  }

  std::string path_;
  std::vector<std::string_view> header_;
  std::ifstream in_;
  std::string line_buffer_;
  std::vector<std::string_view> fields_;
  std::size_t line_no_ = 0;
};

}  // namespace memfail::internal

#endif  // MEMFAIL_SRC_CSV_H_
