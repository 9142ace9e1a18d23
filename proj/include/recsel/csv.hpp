#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace recsel::csv {

// Splits one record. Double-quoted fields may contain the delimiter and "" escapes.
std::vector<std::string> split_line(std::string_view line, char delim = ',');

// Quotes a field only when it needs it.
std::string escape(std::string_view field, char delim = ',');

std::string join(const std::vector<std::string>& fields, char delim = ',');

// Shortest round-trippable decimal form of a double.
std::string format_double(double v);

double parse_double(std::string_view s);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view contents);

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> line_numbers;  // 1-based source line of each row

  // Index of `name` in the header, or npos.
  std::size_t column(std::string_view name) const;
};

Table read_table(const std::filesystem::path& path, char delim = ',');

}  // namespace recsel::csv
