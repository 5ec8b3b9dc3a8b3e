#include "csv.h"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "wildloc/error.h"

namespace wildloc::csv {

std::vector<std::string> SplitLine(std::string_view line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  fields.push_back(std::move(cur));
  return fields;
}

std::vector<Row> ReadFile(const std::filesystem::path& path,
                          std::string_view header) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIoError, path.string());

  std::string line;
  if (!std::getline(in, line)) {
    throw Error(ErrorKind::kFormatError, path.string() + ": empty file");
  }
  if (line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != header) {
    throw Error(ErrorKind::kFormatError,
                path.string() + ":1: expected header '" + std::string(header) +
                    "'");
  }
  const std::size_t arity = SplitLine(header).size();

  std::vector<Row> rows;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    Row row{line_no, SplitLine(line)};
    if (row.fields.size() != arity) {
      throw Error(ErrorKind::kFormatError,
                  path.string() + ":" + std::to_string(line_no) + ": " +
                      std::to_string(row.fields.size()) + " fields, expected " +
                      std::to_string(arity));
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string Escape(std::string_view field) {
  if (field.find_first_of(",\"\n\r") == std::string_view::npos) {
    return std::string(field);
  }
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

double ParseDouble(std::string_view field, const std::filesystem::path& file,
                   int line, std::string_view column) {
  const auto trimmed_begin = field.find_first_not_of(' ');
  const auto trimmed_end = field.find_last_not_of(' ');
  if (trimmed_begin != std::string_view::npos) {
    field = field.substr(trimmed_begin, trimmed_end - trimmed_begin + 1);
  }
  if (!field.empty() && field.front() == '+') field.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] =
      std::from_chars(field.data(), field.data() + field.size(), v);
  if (field.empty() || ec != std::errc() ||
      ptr != field.data() + field.size() || !std::isfinite(v)) {
    throw Error(ErrorKind::kFormatError,
                file.string() + ":" + std::to_string(line) + ": " +
                    std::string(column) + " '" + std::string(field) +
                    "' is not a number");
  }
  return v;
}

std::optional<double> ParseOptionalDouble(std::string_view field,
                                          const std::filesystem::path& file,
                                          int line, std::string_view column) {
  if (field.find_first_not_of(' ') == std::string_view::npos) {
    return std::nullopt;
  }
  return ParseDouble(field, file, line, column);
}

std::string FormatFixed(double v, int decimals) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v,
                                       std::chars_format::fixed, decimals);
  if (ec != std::errc()) return "nan";
  std::string out(buf, ptr);
  if (out.rfind("-0", 0) == 0 &&
      out.find_first_not_of("-0.") == std::string::npos) {
    out.erase(0, 1);
  }
  return out;
}

}  // namespace wildloc::csv
