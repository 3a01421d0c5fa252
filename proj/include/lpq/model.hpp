#pragma once

#include <array>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "lpq/errors.hpp"

namespace lpq {

/// Gradient variable: an N x n real matrix (rows = target components,
/// columns = space directions). Also used for dual variables.
using GradMat = Eigen::MatrixXd;
using Point = Eigen::VectorXd;

/// Structural tuple governing growth and ellipticity assumptions.
struct Regime {
  int n = 2;       // space dimension
  int N = 1;       // target dimension
  double p = 2.0;  // lower growth exponent
  double q = 2.0;  // upper growth exponent
  double mu = 0.0; // degeneracy parameter
  double L = 2.0;  // structural constant

  double p_conj() const { return p / (p - 1.0); }
  double q_conj() const { return q / (q - 1.0); }
};

/// Throws Errc::invalid_regime unless the field invariants hold.
void check_regime(const Regime& r);

/// Throws Errc::equal_exponents when p == q; certification requires p < q.
void require_strict_exponents(const Regime& r);

enum class GateRule { high_dimension, low_dimension };

struct Admissibility {
  bool admissible = false;
  double threshold = std::numeric_limits<double>::infinity();
  GateRule rule = GateRule::low_dimension;
};

const char* gate_rule_name(GateRule rule) noexcept;

Admissibility validate_regime(const Regime& r);

struct ClassicalGates {
  std::map<std::string, bool> gates;     // pq22, pq23, bsbound, cor1, holder
  std::optional<double> holder_exponent; // set when the Holder clause holds
};

ClassicalGates classical_gates(const Regime& r);

enum class RegionKind { ball, cube };

/// Ball or cube (half side = radius) in R^dim.
struct Region {
  Point center;
  double radius = 1.0;
  RegionKind kind = RegionKind::ball;

  bool contains(const Point& x) const;
  Region scaled(double factor) const;
  /// True when the region lies in the closed unit box.
  bool inside_unit_box(double slack = 1e-12) const;
};

/// Concentric region in the unit box [0,1]^dim with radius 1/2.
Region unit_box_region(int dim, RegionKind kind = RegionKind::ball);

/// Uniform grid on [0,1]^dim with the Kuhn triangulation of every cell.
/// Nodes are ordered lexicographically with the first axis fastest.
class Grid {
 public:
  Grid(int dim, int cells_per_side);

  int dim() const { return dim_; }
  int cells_per_side() const { return cells_; }
  double spacing() const { return 1.0 / cells_; }
  std::size_t node_count() const { return node_count_; }
  std::size_t cell_count() const { return cell_count_; }
  std::size_t simplex_count() const { return simplex_nodes_.size() / (dim_ + 1); }
  int simplices_per_cell() const { return dim_ == 2 ? 2 : 6; }
  double simplex_volume() const { return simplex_volume_; }

  std::span<const std::size_t> simplex_nodes(std::size_t s) const {
    return {simplex_nodes_.data() + s * (dim_ + 1), static_cast<std::size_t>(dim_ + 1)};
  }
  /// Axis added when stepping from vertex k to vertex k+1 of simplex s.
  std::span<const int> simplex_axes(std::size_t s) const {
    return {simplex_axes_.data() + s * dim_, static_cast<std::size_t>(dim_)};
  }
  std::size_t simplex_cell(std::size_t s) const { return s / simplices_per_cell(); }

  Point node_point(std::size_t node) const;
  std::array<int, 3> node_index(std::size_t node) const;
  std::size_t node_at(const std::array<int, 3>& idx) const;
  bool is_boundary(std::size_t node) const;
  std::span<const std::size_t> boundary_nodes() const { return boundary_; }
  std::span<const std::size_t> interior_nodes() const { return interior_; }

  std::array<int, 3> cell_index(std::size_t cell) const;
  std::size_t cell_at(const std::array<int, 3>& idx) const;
  Point cell_center(std::size_t cell) const;
  Point simplex_barycenter(std::size_t s) const;

 private:
  int dim_;
  int cells_;
  std::size_t node_count_;
  std::size_t cell_count_;
  double simplex_volume_;
  std::vector<std::size_t> simplex_nodes_;
  std::vector<int> simplex_axes_;
  std::vector<std::size_t> boundary_;
  std::vector<std::size_t> interior_;
};

/// Piecewise-linear field with N components; dof index = node * N + component.
/// Per-simplex gradients are computed once at construction.
class DiscreteField {
 public:
  DiscreteField(std::shared_ptr<const Grid> grid, int components, Eigen::VectorXd nodal_values);

  const Grid& grid() const { return *grid_; }
  std::shared_ptr<const Grid> grid_ptr() const { return grid_; }
  int components() const { return components_; }
  const Eigen::VectorXd& nodal_values() const { return values_; }
  double value(std::size_t node, int component) const {
    return values_[static_cast<Eigen::Index>(node * components_ + component)];
  }
  GradMat gradient(std::size_t simplex) const;

 private:
  std::shared_ptr<const Grid> grid_;
  int components_;
  Eigen::VectorXd values_;
  std::vector<double> gradients_;  // per simplex, N*dim row-major
};

/// Gradient of the PL interpolant of `values` on simplex s, via the Kuhn
/// vertex path: d_axis u = (u(v_{k+1}) - u(v_k)) / h.
GradMat simplex_gradient(const Grid& grid, std::size_t s, int components,
                         const Eigen::VectorXd& values);

/// Nodal interpolation of a function x -> R^N.
template <class Fn>
Eigen::VectorXd interpolate(const Grid& grid, int components, Fn&& fn) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(grid.node_count() * components));
  for (std::size_t a = 0; a < grid.node_count(); ++a) {
    const Eigen::VectorXd y = fn(grid.node_point(a));
    for (int c = 0; c < components; ++c) v[static_cast<Eigen::Index>(a * components + c)] = y[c];
  }
  return v;
}

struct CheckReport {
  bool passed = true;
  double worst_ratio = 0.0;
  std::optional<GradMat> witness;
};

struct SolveReport {
  double energy = 0.0;
  double residual_sup = 0.0;
  int iterations = 0;
  double epsilon = 0.0;
  double gamma_eps = 0.0;
};

struct DiagnosticEntry {
  double lhs = 0.0;
  double rhs = 0.0;
  std::optional<double> fitted_exponent;
  double ratio() const { return rhs > 0.0 ? lhs / rhs : std::numeric_limits<double>::infinity(); }
};

struct DiagnosticsReport {
  std::map<std::string, DiagnosticEntry> entries;
};

/// Row-major flattening of z (index = row * cols + col) and its inverse.
Eigen::VectorXd flatten(const GradMat& z);
GradMat unflatten(const Eigen::VectorXd& v, int rows, int cols);

}  // namespace lpq
