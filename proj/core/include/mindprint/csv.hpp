// Copyright 2026 The Mindprint Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef MINDPRINT_CSV_HPP_
#define MINDPRINT_CSV_HPP_

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace mindprint {

// Shortest decimal text that parses back to exactly `value`.
std::string format_double(double value);
double parse_double(std::string_view text);
long long parse_int(std::string_view text);

// RFC 4180 style: fields containing a comma, quote or newline are quoted.
void write_csv_row(std::ostream& out, std::span<const std::string> fields);
std::vector<std::string> parse_csv_line(std::string_view line);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  // Index of a header column; throws DataError if absent.
  std::size_t column(std::string_view name) const;
};

CsvTable read_csv_file(const std::filesystem::path& path);

// Whole-file helpers. Both throw IoError on failure.
std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view text);

}  // namespace mindprint

#endif  // MINDPRINT_CSV_HPP_
