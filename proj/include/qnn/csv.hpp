#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace qnn {

/// Plain comma-separated table: no quoting, '.' decimal separator, LF lines.
struct CsvTable {
  struct Row {
    std::size_t line = 0;  // 1-based line number in the source
    std::vector<std::string> fields;
  };

  std::vector<std::string> header;
  std::vector<Row> rows;

  /// Column index by name, or throws DataError mentioning `context`.
  std::size_t column(std::string_view name, std::string_view context = "csv") const;
  bool has_column(std::string_view name) const;
};

/// Parses CSV text; every row must have as many fields as the header.
/// `source` names the input in error messages.
CsvTable parse_csv(std::istream& in, const std::string& source);
CsvTable read_csv(const std::filesystem::path& path);

std::vector<std::string> split_csv_line(std::string_view line);

/// Strict numeric parsing of one field; throws DataError naming source:line.
double parse_csv_double(const std::string& field, const std::string& source, std::size_t line);
long long parse_csv_int(const std::string& field, const std::string& source, std::size_t line);

/// Shortest round-trippable decimal representation of a double.
std::string format_double(double value);

}  // namespace qnn
