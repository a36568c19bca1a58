#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace enrollcast::csv {

using Row = std::vector<std::string>;

struct Table {
  Row header;
  std::vector<Row> rows;
};

// RFC 4180 style: comma separated, double-quote escaping, CRLF or LF line
// endings. A leading UTF-8 byte-order mark is skipped. Throws Error(BadCsv)
// on unterminated quotes or rows whose width differs from the header.
Table parse(std::string_view text);

std::string escape(std::string_view field);
std::string format_row(const Row& row);

}  // namespace enrollcast::csv
