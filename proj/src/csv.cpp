#include "root/csv.hpp"

#include "root/error.hpp"

namespace root {

std::vector<CsvRecord> parseCsv(std::string_view text) {
  std::vector<CsvRecord> records;
  std::size_t line = 1;
  std::size_t i = 0;
  if (text.starts_with("\xEF\xBB\xBF")) i = 3;

  while (i < text.size()) {
    CsvRecord record;
    record.line = line;
    std::string field;
    bool rawEmptyLine = true;

    while (true) {
      if (i < text.size() && text[i] == '"') {
        rawEmptyLine = false;
        ++i;
        bool closed = false;
        while (i < text.size()) {
          const char c = text[i];
          if (c == '"') {
            if (i + 1 < text.size() && text[i + 1] == '"') {
              field.push_back('"');
              i += 2;
              continue;
            }
            ++i;
            closed = true;
            break;
          }
          if (c == '\n') ++line;
          field.push_back(c);
          ++i;
        }
        if (!closed) {
          throw Error(ErrorCode::MalformedRow,
                      "unterminated quoted field starting on line " + std::to_string(record.line),
                      std::to_string(record.line));
        }
        if (i < text.size() && text[i] != ',' && text[i] != '\n' && text[i] != '\r') {
          throw Error(ErrorCode::MalformedRow,
                      "unexpected character after closing quote on line " + std::to_string(line),
                      std::to_string(record.line));
        }
      } else {
        while (i < text.size() && text[i] != ',' && text[i] != '\n' && text[i] != '\r') {
          if (text[i] == '"') {
            throw Error(ErrorCode::MalformedRow,
                        "stray quote in unquoted field on line " + std::to_string(line),
                        std::to_string(record.line));
          }
          rawEmptyLine = false;
          field.push_back(text[i]);
          ++i;
        }
      }
      record.fields.push_back(std::move(field));
      field.clear();
      if (i < text.size() && text[i] == ',') {
        rawEmptyLine = false;
        ++i;
        continue;
      }
      break;
    }

    if (i < text.size() && text[i] == '\r') ++i;
    if (i < text.size() && text[i] == '\n') {
      ++i;
      ++line;
    }
    if (!rawEmptyLine) records.push_back(std::move(record));
  }
  return records;
}

std::string csvField(std::string_view value) {
  if (value.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(value);
  std::string out = "\"";
  for (char c : value) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

}  // namespace root
