#include "lpq/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include <Eigen/SparseCholesky>

#include "lpq/sampling.hpp"

namespace lpq {

Schedule Schedule::dyadic(int count) {
  std::vector<double> eps;
  for (int k = 1; k <= count; ++k) eps.push_back(std::ldexp(1.0, -k));
  return from_epsilons(std::move(eps));
}

Schedule Schedule::from_epsilons(std::vector<double> eps) {
  Schedule s;
  s.epsilons = std::move(eps);
  s.mollifier_width = s.epsilons;
  s.validate();
  return s;
}

void Schedule::validate() const {
  if (epsilons.empty()) throw Error(Errc::domain_violation, "schedule needs at least one epsilon");
  if (mollifier_width.size() != epsilons.size())
    throw Error(Errc::domain_violation, "one mollifier width per epsilon required");
  for (std::size_t i = 0; i < epsilons.size(); ++i) {
    if (!(epsilons[i] > 0.0 && epsilons[i] <= 1.0))
      throw Error(Errc::domain_violation, "epsilons must lie in (0,1]");
    if (i > 0 && !(epsilons[i] < epsilons[i - 1]))
      throw Error(Errc::domain_violation, "epsilons must be strictly decreasing");
    if (!(mollifier_width[i] >= 0.0)) throw Error(Errc::domain_violation, "mollifier width must be >= 0");
  }
  if (!(tol_energy > 0.0) || !(tol_residual > 0.0) || max_newton_iters < 1)
    throw Error(Errc::domain_violation, "schedule tolerances must be positive");
}

RegularizedIntegrand::RegularizedIntegrand(IntegrandSpec base, double gamma_eps, double q)
    : base_(std::move(base)),
      gamma_(gamma_eps),
      q_(q),
      spec_(base_ + IntegrandSpec::scaled(gamma_eps, IntegrandSpec::power(1.0, q))) {
  if (!(gamma_eps > 0.0 && gamma_eps < 1.0)) throw Error(Errc::domain_violation, "gamma_eps must lie in (0,1)");
  if (!(q >= 2.0)) throw Error(Errc::domain_violation, "regularization exponent must be >= 2");
}

double gamma_eps(double eps, double grad_q_norm, double q) {
  if (!(eps > 0.0 && eps <= 1.0) || !(grad_q_norm >= 0.0))
    throw Error(Errc::domain_violation, "gamma_eps needs eps in (0,1] and a nonnegative norm");
  return 1.0 / (1.0 + 1.0 / eps + std::pow(grad_q_norm, 2.0 * q) / eps);
}

Eigen::VectorXd mollify_boundary(const Grid& grid, int components, const Eigen::VectorXd& g, double eps,
                                 Exec exec) {
  if (!(eps > 0.0)) throw Error(Errc::domain_violation, "mollifier width must be > 0");
  if (eps < grid.spacing()) return g;
  const auto bnodes = grid.boundary_nodes();
  std::vector<Point> pts;
  pts.reserve(bnodes.size());
  for (const auto a : bnodes) pts.push_back(grid.node_point(a));
  Eigen::VectorXd out = g;
  for_each_index(exec, bnodes.size(), [&](std::size_t i) {
    std::vector<double> acc(static_cast<std::size_t>(components), 0.0);
    double mass = 0.0;
    for (std::size_t j = 0; j < bnodes.size(); ++j) {
      const double rho = (pts[i] - pts[j]).norm() / eps;
      if (rho >= 1.0) continue;
      const double w = std::exp(-1.0 / (1.0 - rho * rho));
      mass += w;
      for (int c = 0; c < components; ++c)
        acc[static_cast<std::size_t>(c)] += w * g[static_cast<Eigen::Index>(bnodes[j] * components + c)];
    }
    for (int c = 0; c < components; ++c)
      out[static_cast<Eigen::Index>(bnodes[i] * components + c)] = acc[static_cast<std::size_t>(c)] / mass;
  });
  return out;
}

Eigen::VectorXd boundary_values(const Grid& grid, int components, const std::string& family, double amplitude,
                                std::uint64_t seed) {
  const int dim = grid.dim();
  if (family == "zero") return Eigen::VectorXd::Zero(static_cast<Eigen::Index>(grid.node_count() * components));
  if (family == "affine") {
    return interpolate(grid, components, [&](const Point& x) {
      Eigen::VectorXd y(components);
      for (int c = 0; c < components; ++c) y[c] = amplitude * x[c % dim];
      return y;
    });
  }
  if (family == "sine") {
    return interpolate(grid, components, [&](const Point& x) {
      Eigen::VectorXd y(components);
      for (int c = 0; c < components; ++c) y[c] = amplitude * std::sin(2.0 * std::numbers::pi * x[c % dim]);
      return y;
    });
  }
  if (family == "random") {
    Rng rng(seed);
    std::uniform_real_distribution<double> u(-amplitude, amplitude);
    Eigen::VectorXd v(static_cast<Eigen::Index>(grid.node_count() * components));
    for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = u(rng);
    return v;
  }
  throw Error(Errc::config_semantic, "unknown boundary family '" + family + "'");
}

namespace {

/// Dof -> interior index, -1 for Dirichlet dofs.
std::vector<long> free_map(const Grid& grid, int components, long& count) {
  std::vector<long> map(grid.node_count() * static_cast<std::size_t>(components), -1);
  count = 0;
  for (const auto a : grid.interior_nodes())
    for (int c = 0; c < components; ++c) map[a * static_cast<std::size_t>(components) + c] = count++;
  return map;
}

/// Local dof (vertex k, component c) sits at k * N + c.
Eigen::MatrixXd local_b_matrix(const Grid& grid, std::size_t s, int components) {
  const int dim = grid.dim();
  const auto axes = grid.simplex_axes(s);
  const double inv_h = grid.cells_per_side();
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(components * dim, (dim + 1) * components);
  for (int k = 0; k < dim; ++k) {
    for (int c = 0; c < components; ++c) {
      const int row = c * dim + axes[k];
      b(row, (k + 1) * components + c) += inv_h;
      b(row, k * components + c) -= inv_h;
    }
  }
  return b;
}

}  // namespace

Assembly assemble(const IntegrandSpec& f, const Grid& grid, int components, const Eigen::VectorXd& values,
                  int order, Exec exec) {
  f.check_shape(components, grid.dim());
  const std::size_t ns = grid.simplex_count();
  const int ldofs = (grid.dim() + 1) * components;
  const double vol = grid.simplex_volume();
  std::vector<double> energies(ns);
  std::vector<double> lgrad(order >= 1 ? ns * ldofs : 0);
  std::vector<double> lhess(order >= 2 ? ns * ldofs * ldofs : 0);

  for_each_index(exec, ns, [&](std::size_t s) {
    const GradMat g = simplex_gradient(grid, s, components, values);
    const Derivs d = evaluate(f, g, order);
    energies[s] = vol * d.value;
    if (order < 1) return;
    const Eigen::MatrixXd b = local_b_matrix(grid, s, components);
    const Eigen::VectorXd lg = vol * (b.transpose() * d.grad);
    for (int i = 0; i < ldofs; ++i) lgrad[s * ldofs + i] = lg[i];
    if (order < 2) return;
    const Eigen::MatrixXd lh = vol * (b.transpose() * d.hess * b);
    for (int i = 0; i < ldofs; ++i)
      for (int j = 0; j < ldofs; ++j) lhess[(s * ldofs + i) * ldofs + j] = lh(i, j);
  });

  Assembly out;
  for (std::size_t s = 0; s < ns; ++s) out.energy += energies[s];
  if (order < 1) return out;
  out.grad = Eigen::VectorXd::Zero(values.size());
  auto dof_of = [&](std::size_t s, int local) {
    const auto nodes = grid.simplex_nodes(s);
    return nodes[static_cast<std::size_t>(local / components)] * components + local % components;
  };
  for (std::size_t s = 0; s < ns; ++s)
    for (int i = 0; i < ldofs; ++i) out.grad[static_cast<Eigen::Index>(dof_of(s, i))] += lgrad[s * ldofs + i];
  if (order < 2) return out;
  long nfree = 0;
  const auto map = free_map(grid, components, nfree);
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(ns * ldofs * ldofs);
  for (std::size_t s = 0; s < ns; ++s) {
    for (int i = 0; i < ldofs; ++i) {
      const long fi = map[dof_of(s, i)];
      if (fi < 0) continue;
      for (int j = 0; j < ldofs; ++j) {
        const long fj = map[dof_of(s, j)];
        if (fj < 0) continue;
        trips.emplace_back(fi, fj, lhess[(s * ldofs + i) * ldofs + j]);
      }
    }
  }
  out.hess.resize(nfree, nfree);
  out.hess.setFromTriplets(trips.begin(), trips.end());
  return out;
}

namespace {

double free_sup(const Eigen::VectorXd& grad, const std::vector<long>& map) {
  double r = 0.0;
  for (std::size_t i = 0; i < map.size(); ++i)
    if (map[i] >= 0) r = std::max(r, std::abs(grad[static_cast<Eigen::Index>(i)]));
  return r;
}

}  // namespace

DirichletSolution minimize_dirichlet(const IntegrandSpec& f, std::shared_ptr<const Grid> grid, int components,
                                     const Eigen::VectorXd& initial, const SolveOptions& opts) {
  if (!grid) throw Error(Errc::shape_mismatch, "solver needs a grid");
  if (initial.size() != static_cast<Eigen::Index>(grid->node_count() * components))
    throw Error(Errc::shape_mismatch, "initial vector does not match the grid");
  long nfree = 0;
  const auto map = free_map(*grid, components, nfree);
  Eigen::VectorXd x = initial;
  SolveReport rep;
  SolveHistory hist;
  Assembly a = assemble(f, *grid, components, x, 2, opts.exec);
  double res = free_sup(a.grad, map);
  double rel_decrease = std::numeric_limits<double>::infinity();
  bool converged = nfree == 0;

  auto to_full = [&](const Eigen::VectorXd& dfree) {
    Eigen::VectorXd d = Eigen::VectorXd::Zero(x.size());
    for (std::size_t i = 0; i < map.size(); ++i)
      if (map[i] >= 0) d[static_cast<Eigen::Index>(i)] = dfree[map[i]];
    return d;
  };
  Eigen::VectorXd gfree(nfree);

  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt;
  int it = 0;
  while (!converged) {
    if (rel_decrease < opts.tol_energy && res < opts.tol_residual) {
      converged = true;
      break;
    }
    if (it >= opts.max_iters) break;
    for (std::size_t i = 0; i < map.size(); ++i)
      if (map[i] >= 0) gfree[map[i]] = a.grad[static_cast<Eigen::Index>(i)];

    Eigen::VectorXd dfree;
    ldlt.compute(a.hess);
    if (ldlt.info() == Eigen::Success) {
      dfree = ldlt.solve(-gfree);
      if (ldlt.info() != Eigen::Success || !dfree.allFinite() || dfree.dot(gfree) >= 0.0) dfree.resize(0);
    }
    auto line_search = [&](const Eigen::VectorXd& dir, bool newton) {
      const Eigen::VectorXd d = to_full(dir);
      const double slope = dir.dot(gfree);
      double t = 1.0;
      for (int k = 0; k < 60; ++k, t *= 0.5) {
        const Eigen::VectorXd xt = x + t * d;
        const Assembly at = assemble(f, *grid, components, xt, k == 0 && newton ? 1 : 0, opts.exec);
        const double et = at.energy;
        if (!std::isfinite(et)) continue;
        bool ok = et < a.energy && et <= a.energy + 1e-4 * t * slope;
        // Near the minimizer the energy change drowns in roundoff; the full
        // Newton step is kept when it still shrinks the residual.
        if (!ok && k == 0 && newton) {
          const double noise = 64.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(a.energy));
          ok = et <= a.energy + noise && free_sup(at.grad, map) < res;
        }
        if (ok) {
          hist.energies.push_back(a.energy);
          rel_decrease = std::max(0.0, a.energy - et) / std::max(1.0, std::abs(a.energy));
          x = xt;
          return true;
        }
      }
      return false;
    };
    bool accepted = dfree.size() > 0 && line_search(dfree, true);
    if (!accepted && res >= opts.tol_residual) accepted = line_search(-gfree, false);
    if (!accepted) {
      if (res < opts.tol_residual) converged = true;
      break;
    }
    ++it;
    a = assemble(f, *grid, components, x, 2, opts.exec);
    res = free_sup(a.grad, map);
  }
  hist.energies.push_back(a.energy);
  rep.energy = a.energy;
  rep.residual_sup = res;
  rep.iterations = it;
  if (!converged) {
    std::ostringstream os;
    os << "Newton stopped after " << it << " iterations with residual " << res;
    throw NonConvergence(os.str(), rep, x);
  }
  return DirichletSolution{DiscreteField(std::move(grid), components, std::move(x)), rep, std::move(hist)};
}

DirichletSolution minimize_dirichlet(const RegularizedIntegrand& feps, double epsilon,
                                     std::shared_ptr<const Grid> grid, int components,
                                     const Eigen::VectorXd& initial, const SolveOptions& opts) {
  try {
    auto sol = minimize_dirichlet(feps.spec(), std::move(grid), components, initial, opts);
    sol.report.epsilon = epsilon;
    sol.report.gamma_eps = feps.gamma_eps();
    return sol;
  } catch (const NonConvergence& e) {
    SolveReport rep = e.report();
    rep.epsilon = epsilon;
    rep.gamma_eps = feps.gamma_eps();
    throw NonConvergence(e.what(), rep, e.state());
  }
}

DiscreteField harmonic_extension(std::shared_ptr<const Grid> grid, int components, const Eigen::VectorXd& g,
                                 Exec exec) {
  SolveOptions opts;
  opts.exec = exec;
  opts.tol_residual = 1e-11;
  return minimize_dirichlet(IntegrandSpec::power(0.0, 2.0), std::move(grid), components, g, opts).field;
}

double el_residual(const IntegrandSpec& f, const DiscreteField& field, Exec exec) {
  long nfree = 0;
  const auto map = free_map(field.grid(), field.components(), nfree);
  const Assembly a = assemble(f, field.grid(), field.components(), field.nodal_values(), 1, exec);
  return free_sup(a.grad, map);
}

double grad_norm(const DiscreteField& field, double s) {
  const Grid& grid = field.grid();
  double acc = 0.0;
  for (std::size_t t = 0; t < grid.simplex_count(); ++t) acc += std::pow(field.gradient(t).norm(), s);
  return std::pow(acc * grid.simplex_volume(), 1.0 / s);
}

double field_energy(const IntegrandSpec& f, const DiscreteField& field, const Region* region) {
  const Grid& grid = field.grid();
  double acc = 0.0;
  for (std::size_t t = 0; t < grid.simplex_count(); ++t) {
    if (region && !region->contains(grid.simplex_barycenter(t))) continue;
    acc += eval(f, field.gradient(t));
  }
  return acc * grid.simplex_volume();
}

namespace {

double increment_norm(const DiscreteField& a, const DiscreteField& b, double p) {
  const DiscreteField diff(a.grid_ptr(), a.components(), a.nodal_values() - b.nodal_values());
  return grad_norm(diff, p);
}

double stress_norm(const IntegrandSpec& f, const DiscreteField& field, double qc) {
  const Grid& grid = field.grid();
  double acc = 0.0;
  for (std::size_t t = 0; t < grid.simplex_count(); ++t)
    acc += std::pow(gradient(f, field.gradient(t)).norm(), qc);
  return acc * grid.simplex_volume();
}

}  // namespace

SchemeResult run_scheme(const IntegrandSpec& f, const Regime& r, std::shared_ptr<const Grid> grid,
                        const Eigen::VectorXd& boundary, const Schedule& schedule, Exec exec) {
  check_regime(r);
  schedule.validate();
  if (!grid) throw Error(Errc::shape_mismatch, "scheme needs a grid");
  if (grid->dim() != r.n) throw Error(Errc::shape_mismatch, "grid dimension differs from regime n");
  f.check_shape(r.N, r.n);
  SolveOptions opts;
  opts.tol_energy = schedule.tol_energy;
  opts.tol_residual = schedule.tol_residual;
  opts.max_iters = schedule.max_newton_iters;
  opts.exec = exec;

  SchemeResult out;
  std::optional<DiscreteField> prev;
  for (std::size_t k = 0; k < schedule.epsilons.size(); ++k) {
    const double eps = schedule.epsilons[k];
    const double width = schedule.mollifier_width[k];
    const Eigen::VectorXd gb = width > 0.0 ? mollify_boundary(*grid, r.N, boundary, width, exec) : boundary;
    const DiscreteField ext = harmonic_extension(grid, r.N, gb, exec);
    SchemeStep step;
    step.epsilon = eps;
    step.mollifier_width = width;
    step.surrogate_norm = grad_norm(ext, r.q);
    step.gamma = gamma_eps(eps, step.surrogate_norm, r.q);
    const RegularizedIntegrand feps(f, step.gamma, r.q);

    Eigen::VectorXd init = ext.nodal_values();
    if (prev) {
      init = prev->nodal_values();
      for (const auto a : grid->boundary_nodes())
        for (int c = 0; c < r.N; ++c) {
          const auto i = static_cast<Eigen::Index>(a * r.N + c);
          init[i] = gb[i];
        }
    }
    std::optional<DiscreteField> u;
    try {
      auto sol = minimize_dirichlet(feps, eps, grid, r.N, init, opts);
      step.report = sol.report;
      u = std::move(sol.field);
    } catch (const NonConvergence& e) {
      std::ostringstream os;
      os << "eps=" << eps << ": " << e.what();
      out.errors.push_back(os.str());
      step.report = e.report();
      u = DiscreteField(grid, r.N, e.state());
    }
    const double qnorm = grad_norm(*u, r.q);
    step.energy_eps = field_energy(feps.spec(), *u);
    step.energy_base = field_energy(f, *u);
    step.gamma_term = step.gamma * std::pow(qnorm, r.q);
    step.enes_lhs = std::pow(grad_norm(*u, r.p), r.p) / r.L + step.gamma_term;
    step.stress_ratio = stress_norm(f, *u, r.q_conj()) / (step.energy_base + 1.0);
    if (prev) step.w1p_increment = increment_norm(*u, *prev, r.p);
    if (step.enes_lhs > step.energy_eps * (1.0 + 1e-12)) out.enes_ok = false;
    if (!out.steps.empty()) {
      const auto& last = out.steps.back();
      if (!(step.gamma_term < last.gamma_term)) out.gamma_term_decreasing = false;
      if (last.w1p_increment && step.w1p_increment && !(*step.w1p_increment < *last.w1p_increment))
        out.increments_decreasing = false;
    }
    out.steps.push_back(step);
    prev = std::move(u);
  }
  out.final_field = std::move(prev);
  return out;
}

}  // namespace lpq
