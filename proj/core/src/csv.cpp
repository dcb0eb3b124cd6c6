#include "nvrot/csv.hpp"

#include <charconv>
#include <istream>
#include <ostream>
#include <sstream>

#include "nvrot/error.hpp"

namespace nvrot::csv {

std::string format(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

Writer& Writer::comment(std::string_view text) {
  out_ << "# " << text << '\n';
  return *this;
}

Writer& Writer::header(std::initializer_list<std::string_view> columns) {
  bool first = true;
  for (auto c : columns) {
    if (!first) out_ << ',';
    out_ << c;
    first = false;
  }
  out_ << '\n';
  return *this;
}

Writer& Writer::row(std::initializer_list<double> values) {
  bool first = true;
  for (double v : values) {
    if (!first) out_ << ',';
    out_ << format(v);
    first = false;
  }
  out_ << '\n';
  return *this;
}

Writer& Writer::row(const std::vector<std::string>& cells) {
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) out_ << ',';
    out_ << cells[i];
  }
  out_ << '\n';
  return *this;
}

std::size_t Table::column(std::string_view name) const {
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (columns[i] == name) return i;
  }
  throw Error("csv.missing_column", "no column named '" + std::string(name) + "'");
}

double Table::number(std::size_t r, std::size_t c) const {
  const std::string& cell = rows.at(r).at(c);
  double v = 0.0;
  auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (res.ec != std::errc{} || res.ptr != cell.data() + cell.size()) {
    throw Error("csv.parse", "row " + std::to_string(r + 1) + ": '" + cell + "' is not a number");
  }
  return v;
}

namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

}  // namespace

Table read(std::istream& in) {
  Table t;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      t.comments.push_back(line.size() > 2 ? line.substr(2) : std::string());
      continue;
    }
    auto cells = split(line);
    if (t.columns.empty()) {
      t.columns = std::move(cells);
      continue;
    }
    if (cells.size() != t.columns.size()) {
      throw Error("csv.parse", "line " + std::to_string(lineno) + ": expected " +
                                   std::to_string(t.columns.size()) + " fields, got " +
                                   std::to_string(cells.size()));
    }
    t.rows.push_back(std::move(cells));
  }
  if (t.columns.empty()) throw Error("csv.parse", "no header row");
  return t;
}

}  // namespace nvrot::csv
