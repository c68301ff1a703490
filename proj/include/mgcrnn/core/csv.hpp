#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace mgcrnn::csv {

using Row = std::vector<std::string>;

/// Splits one CSV line. Double-quoted fields may contain commas and "" escapes.
Row split_line(std::string_view line);

/// Quotes a field only when it contains a comma, quote or newline.
std::string escape(std::string_view field);

struct Table {
  Row header;
  std::vector<Row> rows;

  /// Column position by header name; throws DataError naming the file when absent.
  [[nodiscard]] std::size_t column(std::string_view name) const;
  std::string source;
};

/// Reads a headed CSV file. Blank lines are skipped; ragged rows throw DataError.
Table read_file(const std::filesystem::path& path);

/// Parses a double, throwing DataError with context on failure.
double parse_double(std::string_view text, std::string_view context);
long long parse_int(std::string_view text, std::string_view context);

/// Shortest decimal text that parses back to exactly the same double.
std::string format_double(double v);

}  // namespace mgcrnn::csv
