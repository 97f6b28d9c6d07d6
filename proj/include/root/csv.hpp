#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace root {

struct CsvRecord {
  std::size_t line = 0;  // 1-based line the record starts on
  std::vector<std::string> fields;
};

/// RFC 4180 reader: comma separated, `"` quoting with `""` escapes, quoted
/// fields may span lines, CRLF or LF endings. Blank lines are skipped. An
/// unterminated quote throws Error(MalformedRow) naming the record's line.
std::vector<CsvRecord> parseCsv(std::string_view text);

/// Quotes a field when it contains a comma, quote, or line break.
std::string csvField(std::string_view value);

}  // namespace root
