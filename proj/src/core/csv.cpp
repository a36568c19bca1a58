#include "enrollcast/csv.hpp"

#include "enrollcast/error.hpp"

namespace enrollcast::csv {

namespace {

std::vector<Row> parse_records(std::string_view text) {
  if (text.starts_with("\xEF\xBB\xBF")) text.remove_prefix(3);

  std::vector<Row> records;
  Row row;
  std::string field;
  bool in_quotes = false;
  bool row_has_content = false;
  std::size_t line = 1;

  auto end_field = [&] {
    row.push_back(std::move(field));
    field.clear();
  };
  auto end_row = [&] {
    end_field();
    // Blank lines carry no record.
    if (row_has_content || row.size() > 1) records.push_back(std::move(row));
    row.clear();
    row_has_content = false;
  };

  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        if (c == '\n') ++line;
        field.push_back(c);
      }
      continue;
    }
    switch (c) {
      case '"':
        in_quotes = true;
        row_has_content = true;
        break;
      case ',':
        end_field();
        row_has_content = true;
        break;
      case '\r':
        if (i + 1 < text.size() && text[i + 1] == '\n') break;
        end_row();
        ++line;
        break;
      case '\n':
        end_row();
        ++line;
        break;
      default:
        field.push_back(c);
        row_has_content = true;
    }
  }
  if (in_quotes) throw Error(ErrorCode::BadCsv, "unterminated quoted field near line " + std::to_string(line));
  if (row_has_content || !field.empty()) end_row();
  return records;
}

}  // namespace

Table parse(std::string_view text) {
  auto records = parse_records(text);
  if (records.empty()) throw Error(ErrorCode::BadCsv, "CSV has no header row");
  Table table;
  table.header = std::move(records.front());
  table.rows.reserve(records.size() - 1);
  for (std::size_t r = 1; r < records.size(); ++r) {
    if (records[r].size() != table.header.size()) {
      throw Error(ErrorCode::BadCsv, "row " + std::to_string(r) + " has " + std::to_string(records[r].size()) +
                                         " fields, header has " + std::to_string(table.header.size()));
    }
    table.rows.push_back(std::move(records[r]));
  }
  return table;
}

std::string escape(std::string_view field) {
  if (field.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

std::string format_row(const Row& row) {
  std::string out;
  for (std::size_t i = 0; i < row.size(); ++i) {
    if (i) out.push_back(',');
    out += escape(row[i]);
  }
  out.push_back('\n');
  return out;
}

}  // namespace enrollcast::csv
