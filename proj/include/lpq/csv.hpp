#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "lpq/model.hpp"

namespace lpq {

/// %.17g, with nan/inf spelled out.
std::string format_real(double x);

/// A header plus rows of preformatted cells; cells with commas, quotes or
/// newlines are quoted on output.
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header);

  /// Throws Errc::shape_mismatch when the row width differs from the header.
  void add_row(std::vector<std::string> cells);
  const std::vector<std::string>& header() const { return header_; }
  const std::vector<std::vector<std::string>>& rows() const { return rows_; }
  void write(std::ostream& os) const;

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

/// One record per node: coordinates x0.. then components u0..
CsvTable field_nodes_table(const DiscreteField& field);
/// One record per simplex: barycenter then the row-major gradient g_r_c.
CsvTable field_gradients_table(const DiscreteField& field);

}  // namespace lpq
