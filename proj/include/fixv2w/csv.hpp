// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace fixv2w::csv {

using Row = std::vector<std::string>;

// RFC 4180 reader: quoted fields, doubled quotes, embedded newlines, CRLF.
// Throws ParseError on an unterminated quote.
std::vector<Row> parse(std::string_view text);

// Header-addressed view over parsed rows.
class Table {
 public:
  explicit Table(std::vector<Row> rows);

  std::optional<std::size_t> column(std::string_view name) const;
  std::size_t require_column(std::string_view name) const;
  const std::vector<Row>& rows() const { return body_; }
  const Row& header() const { return header_; }

  // Empty string when the row is short.
  static std::string_view field(const Row& row, std::size_t col);

 private:
  Row header_;
  std::vector<Row> body_;
};

// Quote a field for output when it contains separators, quotes or newlines.
std::string escape(std::string_view field);

}  // namespace fixv2w::csv
