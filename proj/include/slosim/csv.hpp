#pragma once

#include <string>
#include <vector>

namespace slosim::csv {

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> line_numbers;  // 1-based source line of each row

  // Column index by name; throws ParseError when absent.
  std::size_t column(const std::string& name, const std::string& path) const;
};

// Reads a comma-separated file with a mandatory header line. Fields are
// whitespace-trimmed; blank lines are skipped. No quoting support.
Table read_file(const std::string& path);

std::string trim(const std::string& s);
std::vector<std::string> split(const std::string& line, char sep = ',');

// Strict numeric parsers; throw ParseError naming the line on bad input.
long long parse_int(const std::string& field, std::size_t line, const std::string& path);
double parse_double(const std::string& field, std::size_t line, const std::string& path);

// Epoch seconds from "123456", "2016-01-01T00:05:00" or "2016-01-01 00:05:00".
std::int64_t parse_timestamp(const std::string& field, std::size_t line, const std::string& path);

}  // namespace slosim::csv
