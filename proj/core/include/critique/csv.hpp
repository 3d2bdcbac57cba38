#pragma once

#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace critique::csv {

/// Splits one RFC-4180 record. Quoted fields may contain commas and doubled quotes;
/// embedded newlines are not supported.
std::vector<std::string> split_line(std::string_view line);

/// Quotes a field when it contains a comma, quote, or leading/trailing space.
std::string escape(std::string_view field);

/// A header-addressed CSV table read line by line.
class Table {
 public:
  explicit Table(std::istream& in);

  const std::vector<std::string>& header() const { return header_; }
  std::optional<std::size_t> column(std::string_view name) const;

  /// Advances to the next non-empty record. `row_number()` is the 1-based line number.
  bool next(std::vector<std::string>& fields);
  std::size_t row_number() const { return line_no_; }

 private:
  std::istream& in_;
  std::vector<std::string> header_;
  std::size_t line_no_ = 0;
};

}  // namespace critique::csv
