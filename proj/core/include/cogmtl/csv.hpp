#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace cogmtl::csv {

struct Row {
  std::size_t line = 0;  // 1-based line number in the source file
  std::vector<std::string> cells;
};

struct Table {
  std::filesystem::path path;
  std::size_t header_line = 0;
  std::vector<std::string> header;
  std::vector<Row> rows;

  /// Column index of `name`, or -1.
  [[nodiscard]] int column(std::string_view name) const;
};

/// Reads a comma-separated file. Leading lines starting with '#' and blank
/// lines are skipped; double-quoted cells may contain commas. Throws DataError
/// on ragged rows, ConfigError if the file cannot be opened.
Table read(const std::filesystem::path& path);

std::vector<std::string> split_line(std::string_view line);

/// Shortest round-trip decimal representation.
std::string format(double value);

/// Parses a full-string decimal number; returns false on any trailing junk.
bool parse_double(std::string_view text, double& out);

std::string quote_if_needed(std::string_view cell);

}  // namespace cogmtl::csv
