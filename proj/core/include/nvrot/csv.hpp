#pragma once

#include <initializer_list>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace nvrot::csv {

// Shortest round-trip decimal representation.
std::string format(double v);

// Writes "# key: value" comment lines followed by the column header.
class Writer {
 public:
  explicit Writer(std::ostream& out) : out_(out) {}

  Writer& comment(std::string_view text);
  Writer& header(std::initializer_list<std::string_view> columns);
  Writer& row(std::initializer_list<double> values);
  Writer& row(const std::vector<std::string>& cells);

 private:
  std::ostream& out_;
};

struct Table {
  std::vector<std::string> comments;
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  // Index of a named column; throws csv.missing_column.
  std::size_t column(std::string_view name) const;
  double number(std::size_t row, std::size_t col) const;
};

// Parses the dialect written by Writer. Throws csv.parse on malformed input.
Table read(std::istream& in);

}  // namespace nvrot::csv
