#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace enertree::csv {

// Minimal CSV reader for the numeric tables this library consumes: comma
// separated, no quoting, blank lines and '#' comments skipped.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  // Column index by name, or npos.
  std::size_t column(std::string_view name) const;
};

Table parse(std::string_view text);

// Throws ParseError naming the row and column when the cell is not a number.
double to_double(const std::string& cell, std::size_t row, std::string_view column);

// Shortest round-trip representation.
std::string format_double(double value);

}  // namespace enertree::csv
