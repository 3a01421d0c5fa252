#include "lpq/csv.hpp"

#include <cmath>
#include <cstdio>

namespace lpq {

std::string format_real(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

CsvTable::CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

void CsvTable::add_row(std::vector<std::string> cells) {
  if (cells.size() != header_.size())
    throw Error(Errc::shape_mismatch, "csv row has " + std::to_string(cells.size()) + " cells, header has " +
                                          std::to_string(header_.size()));
  rows_.push_back(std::move(cells));
}

namespace {

void write_cell(std::ostream& os, const std::string& cell) {
  if (cell.find_first_of(",\"\n\r") == std::string::npos) {
    os << cell;
    return;
  }
  os << '"';
  for (const char c : cell) {
    if (c == '"') os << '"';
    os << c;
  }
  os << '"';
}

void write_line(std::ostream& os, const std::vector<std::string>& cells) {
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) os << ',';
    write_cell(os, cells[i]);
  }
  os << '\n';
}

}  // namespace

void CsvTable::write(std::ostream& os) const {
  write_line(os, header_);
  for (const auto& r : rows_) write_line(os, r);
}

CsvTable field_nodes_table(const DiscreteField& field) {
  const Grid& grid = field.grid();
  std::vector<std::string> header;
  for (int k = 0; k < grid.dim(); ++k) header.push_back("x" + std::to_string(k));
  for (int c = 0; c < field.components(); ++c) header.push_back("u" + std::to_string(c));
  CsvTable table(std::move(header));
  for (std::size_t i = 0; i < grid.node_count(); ++i) {
    std::vector<std::string> row;
    const Point x = grid.node_point(i);
    for (int k = 0; k < grid.dim(); ++k) row.push_back(format_real(x[k]));
    for (int c = 0; c < field.components(); ++c) row.push_back(format_real(field.value(i, c)));
    table.add_row(std::move(row));
  }
  return table;
}

CsvTable field_gradients_table(const DiscreteField& field) {
  const Grid& grid = field.grid();
  std::vector<std::string> header{"simplex"};
  for (int k = 0; k < grid.dim(); ++k) header.push_back("b" + std::to_string(k));
  for (int r = 0; r < field.components(); ++r)
    for (int c = 0; c < grid.dim(); ++c) header.push_back("g_" + std::to_string(r) + "_" + std::to_string(c));
  CsvTable table(std::move(header));
  for (std::size_t s = 0; s < grid.simplex_count(); ++s) {
    std::vector<std::string> row{std::to_string(s)};
    const Point b = grid.simplex_barycenter(s);
    for (int k = 0; k < grid.dim(); ++k) row.push_back(format_real(b[k]));
    const GradMat g = field.gradient(s);
    for (int r = 0; r < g.rows(); ++r)
      for (int c = 0; c < g.cols(); ++c) row.push_back(format_real(g(r, c)));
    table.add_row(std::move(row));
  }
  return table;
}

}  // namespace lpq
