#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace dqf::csv {

using Row = std::vector<std::string>;

/// Reads an RFC-4180 style CSV: comma separated, optional double-quoted
/// fields with "" escapes, CRLF or LF line endings. Blank lines are skipped.
std::vector<Row> read(std::istream& in);
std::vector<Row> read_file(const std::string& path);

/// Parses a finite real. Throws ParseError naming (row, col) on failure;
/// row and col are 1-based positions in the file.
double parse_real(std::string_view cell, std::size_t row, std::size_t col);

/// Quotes a field if it contains a separator, quote or newline.
std::string escape(std::string_view field);

/// Shortest round-trip decimal form of a double.
std::string format_real(double value);

}  // namespace dqf::csv
