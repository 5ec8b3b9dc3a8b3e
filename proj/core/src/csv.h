#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace wildloc::csv {

struct Row {
  int line = 0;  // 1-based line number in the file
  std::vector<std::string> fields;
};

// Splits one line on commas; double-quoted fields may contain commas and
// doubled quotes.
std::vector<std::string> SplitLine(std::string_view line);

// Reads a UTF-8 CSV whose first line must equal `header` exactly (a BOM and
// trailing CR are tolerated). Blank lines are skipped; every row must have
// as many fields as the header. Throws kIoError / kFormatError.
std::vector<Row> ReadFile(const std::filesystem::path& path,
                          std::string_view header);

// Quotes a field when it contains a comma, quote or newline.
std::string Escape(std::string_view field);

double ParseDouble(std::string_view field, const std::filesystem::path& file,
                   int line, std::string_view column);
std::optional<double> ParseOptionalDouble(std::string_view field,
                                          const std::filesystem::path& file,
                                          int line, std::string_view column);

// Fixed-point formatting independent of the global locale.
std::string FormatFixed(double v, int decimals);

}  // namespace wildloc::csv
