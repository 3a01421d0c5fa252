#include "lpq/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace lpq {

const char* errc_name(Errc code) noexcept {
  switch (code) {
    case Errc::invalid_regime: return "invalid-regime";
    case Errc::shape_mismatch: return "shape-mismatch";
    case Errc::not_even: return "not-even";
    case Errc::degree_too_large: return "degree-too-large";
    case Errc::degenerate_point: return "degenerate-point";
    case Errc::degenerate_form: return "degenerate-form";
    case Errc::singular_hessian: return "singular-hessian";
    case Errc::non_convergence: return "non-convergence";
    case Errc::non_finite: return "non-finite";
    case Errc::equal_exponents: return "equal-exponents";
    case Errc::inadmissible_sobolev_exponent: return "inadmissible-sobolev-exponent";
    case Errc::region_outside_domain: return "region-outside-domain";
    case Errc::scalar_only: return "scalar-only";
    case Errc::precondition_violation: return "precondition-violation";
    case Errc::domain_violation: return "domain-violation";
    case Errc::lower_bound_violation: return "lower-bound-violation";
    case Errc::config_syntax: return "config-syntax";
    case Errc::config_semantic: return "config-semantic";
  }
  return "unknown";
}

void check_regime(const Regime& r) {
  std::ostringstream why;
  if (r.n < 2) why << "n must be >= 2; ";
  if (r.N < 1) why << "N must be >= 1; ";
  if (!(r.p >= 2.0)) why << "p must be >= 2; ";
  if (!(r.q >= r.p) || !std::isfinite(r.q)) why << "q must be finite and >= p; ";
  if (!(r.mu >= 0.0 && r.mu <= 1.0)) why << "mu must lie in [0,1]; ";
  if (!(r.L > 1.0) || !std::isfinite(r.L)) why << "L must be finite and > 1; ";
  const std::string msg = why.str();
  if (!msg.empty()) throw Error(Errc::invalid_regime, msg);
}

void require_strict_exponents(const Regime& r) {
  check_regime(r);
  if (r.p == r.q) throw Error(Errc::equal_exponents, "certification requires p < q");
}

const char* gate_rule_name(GateRule rule) noexcept {
  return rule == GateRule::high_dimension ? "n>=4:q<p(n-1)/(n-3)" : "n<=3:unbounded";
}

Admissibility validate_regime(const Regime& r) {
  check_regime(r);
  Admissibility out;
  if (r.n >= 4) {
    out.rule = GateRule::high_dimension;
    out.threshold = r.p * (r.n - 1.0) / (r.n - 3.0);
    out.admissible = r.q < out.threshold;
  } else {
    out.rule = GateRule::low_dimension;
    out.threshold = std::numeric_limits<double>::infinity();
    out.admissible = true;
  }
  return out;
}

ClassicalGates classical_gates(const Regime& r) {
  check_regime(r);
  const double n = r.n;
  ClassicalGates g;
  const bool high = r.n >= 3;
  g.gates["pq22"] = high ? r.q < n * r.p / (n - 2.0) : true;
  g.gates["pq23"] = r.q < r.p + 2.0 * r.p / n;
  g.gates["bsbound"] = r.q < r.p + 2.0 * r.p / (n - 1.0);
  g.gates["cor1"] = high ? r.q <= n * r.p / (n - 2.0) : true;
  const bool holder = high && r.p > n - 2.0;
  g.gates["holder"] = holder;
  if (holder) g.holder_exponent = 1.0 - (n - 2.0) / r.p;
  return g;
}

bool Region::contains(const Point& x) const {
  if (kind == RegionKind::ball) return (x - center).norm() < radius;
  return (x - center).cwiseAbs().maxCoeff() < radius;
}

Region Region::scaled(double factor) const { return Region{center, radius * factor, kind}; }

bool Region::inside_unit_box(double slack) const {
  for (Eigen::Index i = 0; i < center.size(); ++i) {
    if (center[i] - radius < -slack || center[i] + radius > 1.0 + slack) return false;
  }
  return true;
}

Region unit_box_region(int dim, RegionKind kind) {
  return Region{Point::Constant(dim, 0.5), 0.5, kind};
}

namespace {

std::size_t ipow(std::size_t base, int e) {
  std::size_t out = 1;
  for (int i = 0; i < e; ++i) out *= base;
  return out;
}

}  // namespace

Grid::Grid(int dim, int cells_per_side) : dim_(dim), cells_(cells_per_side) {
  if (dim != 2 && dim != 3) throw Error(Errc::domain_violation, "grid dimension must be 2 or 3");
  if (cells_per_side < 2) throw Error(Errc::domain_violation, "cells_per_side must be >= 2");
  node_count_ = ipow(static_cast<std::size_t>(cells_ + 1), dim_);
  cell_count_ = ipow(static_cast<std::size_t>(cells_), dim_);
  const double h = spacing();
  simplex_volume_ = dim_ == 2 ? 0.5 * h * h : h * h * h / 6.0;

  std::vector<int> perm(dim_);
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<std::vector<int>> perms;
  do perms.push_back(perm);
  while (std::next_permutation(perm.begin(), perm.end()));

  simplex_nodes_.reserve(cell_count_ * perms.size() * (dim_ + 1));
  simplex_axes_.reserve(cell_count_ * perms.size() * dim_);
  for (std::size_t c = 0; c < cell_count_; ++c) {
    const auto base = cell_index(c);
    for (const auto& pm : perms) {
      auto idx = base;
      simplex_nodes_.push_back(node_at(idx));
      for (int k = 0; k < dim_; ++k) {
        ++idx[pm[k]];
        simplex_nodes_.push_back(node_at(idx));
        simplex_axes_.push_back(pm[k]);
      }
    }
  }

  for (std::size_t a = 0; a < node_count_; ++a) {
    (is_boundary(a) ? boundary_ : interior_).push_back(a);
  }
}

std::array<int, 3> Grid::node_index(std::size_t node) const {
  std::array<int, 3> idx{0, 0, 0};
  const auto side = static_cast<std::size_t>(cells_ + 1);
  for (int k = 0; k < dim_; ++k) {
    idx[k] = static_cast<int>(node % side);
    node /= side;
  }
  return idx;
}

std::size_t Grid::node_at(const std::array<int, 3>& idx) const {
  const auto side = static_cast<std::size_t>(cells_ + 1);
  std::size_t out = 0;
  for (int k = dim_ - 1; k >= 0; --k) out = out * side + static_cast<std::size_t>(idx[k]);
  return out;
}

Point Grid::node_point(std::size_t node) const {
  const auto idx = node_index(node);
  Point x(dim_);
  for (int k = 0; k < dim_; ++k) x[k] = static_cast<double>(idx[k]) / cells_;
  return x;
}

bool Grid::is_boundary(std::size_t node) const {
  const auto idx = node_index(node);
  for (int k = 0; k < dim_; ++k) {
    if (idx[k] == 0 || idx[k] == cells_) return true;
  }
  return false;
}

std::array<int, 3> Grid::cell_index(std::size_t cell) const {
  std::array<int, 3> idx{0, 0, 0};
  const auto side = static_cast<std::size_t>(cells_);
  for (int k = 0; k < dim_; ++k) {
    idx[k] = static_cast<int>(cell % side);
    cell /= side;
  }
  return idx;
}

std::size_t Grid::cell_at(const std::array<int, 3>& idx) const {
  const auto side = static_cast<std::size_t>(cells_);
  std::size_t out = 0;
  for (int k = dim_ - 1; k >= 0; --k) out = out * side + static_cast<std::size_t>(idx[k]);
  return out;
}

Point Grid::cell_center(std::size_t cell) const {
  const auto idx = cell_index(cell);
  Point x(dim_);
  for (int k = 0; k < dim_; ++k) x[k] = (idx[k] + 0.5) / cells_;
  return x;
}

Point Grid::simplex_barycenter(std::size_t s) const {
  Point x = Point::Zero(dim_);
  for (const auto a : simplex_nodes(s)) x += node_point(a);
  return x / (dim_ + 1.0);
}

GradMat simplex_gradient(const Grid& grid, std::size_t s, int components,
                         const Eigen::VectorXd& values) {
  const auto nodes = grid.simplex_nodes(s);
  const auto axes = grid.simplex_axes(s);
  const double inv_h = grid.cells_per_side();
  GradMat g(components, grid.dim());
  for (int k = 0; k < grid.dim(); ++k) {
    const auto lo = static_cast<Eigen::Index>(nodes[k] * components);
    const auto hi = static_cast<Eigen::Index>(nodes[k + 1] * components);
    for (int c = 0; c < components; ++c) g(c, axes[k]) = (values[hi + c] - values[lo + c]) * inv_h;
  }
  return g;
}

DiscreteField::DiscreteField(std::shared_ptr<const Grid> grid, int components,
                             Eigen::VectorXd nodal_values)
    : grid_(std::move(grid)), components_(components), values_(std::move(nodal_values)) {
  if (!grid_) throw Error(Errc::shape_mismatch, "field needs a grid");
  if (components_ < 1 ||
      values_.size() != static_cast<Eigen::Index>(grid_->node_count() * components_)) {
    throw Error(Errc::shape_mismatch, "nodal value count does not match grid");
  }
  const std::size_t stride = static_cast<std::size_t>(components_ * grid_->dim());
  gradients_.resize(grid_->simplex_count() * stride);
  for (std::size_t s = 0; s < grid_->simplex_count(); ++s) {
    const GradMat g = simplex_gradient(*grid_, s, components_, values_);
    for (int c = 0; c < components_; ++c)
      for (int j = 0; j < grid_->dim(); ++j) gradients_[s * stride + c * grid_->dim() + j] = g(c, j);
  }
}

GradMat DiscreteField::gradient(std::size_t simplex) const {
  const std::size_t stride = static_cast<std::size_t>(components_ * grid_->dim());
  GradMat g(components_, grid_->dim());
  for (int c = 0; c < components_; ++c)
    for (int j = 0; j < grid_->dim(); ++j) g(c, j) = gradients_[simplex * stride + c * grid_->dim() + j];
  return g;
}

Eigen::VectorXd flatten(const GradMat& z) {
  Eigen::VectorXd v(z.size());
  for (Eigen::Index r = 0; r < z.rows(); ++r)
    for (Eigen::Index c = 0; c < z.cols(); ++c) v[r * z.cols() + c] = z(r, c);
  return v;
}

GradMat unflatten(const Eigen::VectorXd& v, int rows, int cols) {
  if (v.size() != static_cast<Eigen::Index>(rows) * cols)
    throw Error(Errc::shape_mismatch, "flat vector size does not match matrix shape");
  GradMat z(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) z(r, c) = v[r * cols + c];
  return z;
}

}  // namespace lpq
