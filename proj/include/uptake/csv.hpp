/*
 * Copyright 2026 the uptake authors.
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
#pragma once

// Minimal RFC 4180 CSV reading/writing: quoted fields, embedded commas,
// quotes, and newlines. Readers report 1-based line numbers on errors.

#include <istream>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "uptake/error.hpp"

namespace uptake {

class CsvReader {
 public:
  explicit CsvReader(std::istream& in) : in_(in) {}

  /// Reads the next record into `row`. Returns false at end of input.
  bool next(std::vector<std::string>& row) {
    row.clear();
    int c = in_.get();
    // swallow a trailing newline-only tail
    if (c == std::istream::traits_type::eof()) return false;
    record_line_ = line_;
    std::string field;
    bool quoted = false;
    for (;;) {
      if (c == std::istream::traits_type::eof()) {
        if (quoted) throw parse_error("unterminated quoted field", record_line_);
        row.push_back(std::move(field));
        return true;
      }
      const char ch = static_cast<char>(c);
      if (quoted) {
        if (ch == '"') {
          const int peek = in_.peek();
          if (peek == '"') {
            in_.get();
            field.push_back('"');
          } else {
            quoted = false;
          }
        } else {
          if (ch == '\n') ++line_;
          field.push_back(ch);
        }
      } else if (ch == '"' && field.empty()) {
        quoted = true;
      } else if (ch == ',') {
        row.push_back(std::move(field));
        field.clear();
      } else if (ch == '\n' || ch == '\r') {
        if (ch == '\r' && in_.peek() == '\n') in_.get();
        ++line_;
        row.push_back(std::move(field));
        return true;
      } else {
        field.push_back(ch);
      }
      c = in_.get();
    }
  }

  /// 1-based line on which the most recent record started.
  std::size_t line() const { return record_line_; }

 private:
  std::istream& in_;
  std::size_t line_ = 1;
  std::size_t record_line_ = 1;
};

inline std::string csv_escape(std::string_view field) {
  const bool needs_quotes =
      field.find_first_of(",\"\r\n") != std::string_view::npos;
  if (!needs_quotes) return std::string(field);
  std::string out = "\"";
  for (const char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

inline void write_csv_row(std::ostream& out,
                          const std::vector<std::string>& row) {
  for (std::size_t i = 0; i < row.size(); ++i) {
    if (i) out << ',';
    out << csv_escape(row[i]);
  }
  out << '\n';
}

/// Parses the whole stream; convenience for small files.
inline std::vector<std::vector<std::string>> read_csv(std::istream& in) {
  CsvReader reader(in);
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  while (reader.next(row)) rows.push_back(row);
  return rows;
}

}  // namespace uptake
