#include "lpq/integrands.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace lpq {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

void require_finite(double x, const char* what) {
  if (!std::isfinite(x)) throw Error(Errc::non_finite, what);
}

void eval_power(const PowerNorm& f, const Eigen::VectorXd& z, int order, Derivs& out) {
  const Eigen::Index d = z.size();
  const double sq = f.mu * f.mu + z.squaredNorm();
  const double ell = std::sqrt(sq);
  out.value = std::pow(ell, f.p);
  if (order < 1) return;
  if (ell == 0.0) {
    out.grad = Eigen::VectorXd::Zero(d);
    if (order < 2) return;
    if (f.p == 2.0) {
      out.hess = 2.0 * Eigen::MatrixXd::Identity(d, d);
    } else if (f.p > 2.0) {
      out.hess = Eigen::MatrixXd::Zero(d, d);
    } else {
      throw Error(Errc::non_finite, "power hessian unbounded at the origin for p < 2");
    }
    return;
  }
  const double w = f.p * std::pow(ell, f.p - 2.0);
  out.grad = w * z;
  if (order < 2) return;
  out.hess = w * Eigen::MatrixXd::Identity(d, d);
  if (f.p != 2.0) out.hess += f.p * (f.p - 2.0) * std::pow(ell, f.p - 4.0) * (z * z.transpose());
}

void eval_axis(const AxisPower& f, const Eigen::VectorXd& z, int rows, int cols, int order,
               Derivs& out) {
  const Eigen::Index d = z.size();
  Eigen::VectorXd c(rows);
  for (int r = 0; r < rows; ++r) c[r] = z[r * cols + f.axis];
  const double norm = c.norm();
  out.value = std::pow(norm, f.q);
  if (order < 1) return;
  out.grad = Eigen::VectorXd::Zero(d);
  if (order >= 2) out.hess = Eigen::MatrixXd::Zero(d, d);
  if (norm == 0.0) {
    if (order >= 2) {
      if (f.q == 2.0) {
        for (int r = 0; r < rows; ++r) out.hess(r * cols + f.axis, r * cols + f.axis) = 2.0;
      } else if (f.q < 2.0) {
        throw Error(Errc::non_finite, "axis hessian unbounded at the origin for q < 2");
      }
    }
    return;
  }
  const double w = f.q * std::pow(norm, f.q - 2.0);
  for (int r = 0; r < rows; ++r) out.grad[r * cols + f.axis] = w * c[r];
  if (order < 2) return;
  const double w2 = f.q == 2.0 ? 0.0 : f.q * (f.q - 2.0) * std::pow(norm, f.q - 4.0);
  for (int r = 0; r < rows; ++r) {
    for (int s = 0; s < rows; ++s) {
      out.hess(r * cols + f.axis, s * cols + f.axis) = (r == s ? w : 0.0) + w2 * c[r] * c[s];
    }
  }
}

void eval_node(const IntegrandSpec& f, const Eigen::VectorXd& z, int rows, int cols, int order,
               Derivs& out) {
  std::visit(Overloaded{
                 [&](const PowerNorm& g) { eval_power(g, z, order, out); },
                 [&](const AxisPower& g) { eval_axis(g, z, rows, cols, order, out); },
                 [&](const EvenPolynomial& g) {
                   g.poly->evaluate(z, order, out.value, order >= 1 ? &out.grad : nullptr,
                                    order >= 2 ? &out.hess : nullptr);
                 },
                 [&](const SumOf& g) {
                   const Eigen::Index d = z.size();
                   out.value = 0.0;
                   if (order >= 1) out.grad = Eigen::VectorXd::Zero(d);
                   if (order >= 2) out.hess = Eigen::MatrixXd::Zero(d, d);
                   Derivs part;
                   for (const auto& t : g.terms) {
                     eval_node(t, z, rows, cols, order, part);
                     out.value += part.value;
                     if (order >= 1) out.grad += part.grad;
                     if (order >= 2) out.hess += part.hess;
                   }
                 },
                 [&](const ScaledBy& g) {
                   eval_node(*g.inner, z, rows, cols, order, out);
                   out.value *= g.coeff;
                   if (order >= 1) out.grad *= g.coeff;
                   if (order >= 2) out.hess *= g.coeff;
                 },
             },
             f.node());
}

}  // namespace

IntegrandSpec IntegrandSpec::power(double mu, double p) {
  if (!(mu >= 0.0) || !std::isfinite(mu)) throw Error(Errc::domain_violation, "power: mu must be >= 0");
  if (!(p >= 1.0) || !std::isfinite(p)) throw Error(Errc::domain_violation, "power: p must be >= 1");
  return IntegrandSpec(PowerNorm{mu, p});
}

IntegrandSpec IntegrandSpec::axis(int axis, double q) {
  if (axis < 0) throw Error(Errc::domain_violation, "axis index must be >= 0");
  if (!(q >= 1.0) || !std::isfinite(q)) throw Error(Errc::domain_violation, "axis: q must be >= 1");
  return IntegrandSpec(AxisPower{axis, q});
}

IntegrandSpec IntegrandSpec::polynomial(Polynomial poly) {
  for (const auto& c : poly.components()) {
    if (c.degree() % 2 != 0 && !c.is_zero())
      throw Error(Errc::not_even, "component of odd degree " + std::to_string(c.degree()));
  }
  return IntegrandSpec(EvenPolynomial{std::make_shared<const Polynomial>(std::move(poly))});
}

IntegrandSpec IntegrandSpec::sum(std::vector<IntegrandSpec> terms) {
  if (terms.empty()) throw Error(Errc::domain_violation, "sum must be non-empty");
  return IntegrandSpec(SumOf{std::move(terms)});
}

IntegrandSpec IntegrandSpec::scaled(double coeff, IntegrandSpec inner) {
  if (!(coeff >= 0.0) || !std::isfinite(coeff))
    throw Error(Errc::domain_violation, "scale coefficient must be finite and >= 0");
  return IntegrandSpec(ScaledBy{coeff, std::make_shared<const IntegrandSpec>(std::move(inner))});
}

IntegrandSpec operator+(const IntegrandSpec& a, const IntegrandSpec& b) {
  std::vector<IntegrandSpec> terms;
  for (const auto* f : {&a, &b}) {
    if (const auto* s = std::get_if<SumOf>(&f->node())) {
      terms.insert(terms.end(), s->terms.begin(), s->terms.end());
    } else {
      terms.push_back(*f);
    }
  }
  return IntegrandSpec::sum(std::move(terms));
}

IntegrandSpec operator*(double coeff, const IntegrandSpec& f) { return IntegrandSpec::scaled(coeff, f); }

std::string IntegrandSpec::describe() const {
  std::ostringstream os;
  os.precision(17);
  std::visit(Overloaded{
                 [&](const PowerNorm& g) { os << "power(mu=" << g.mu << ",p=" << g.p << ")"; },
                 [&](const AxisPower& g) { os << "axis(i=" << g.axis + 1 << ",q=" << g.q << ")"; },
                 [&](const EvenPolynomial& g) { os << "poly(degree=" << g.poly->degree() << ")"; },
                 [&](const SumOf& g) {
                   for (std::size_t i = 0; i < g.terms.size(); ++i) os << (i ? " + " : "") << g.terms[i].describe();
                 },
                 [&](const ScaledBy& g) { os << g.coeff << "*" << g.inner->describe(); },
             },
             node_);
  return os.str();
}

double IntegrandSpec::lower_exponent() const {
  return std::visit(Overloaded{
                        [](const PowerNorm& g) { return g.p; },
                        [](const AxisPower& g) { return g.q; },
                        [](const EvenPolynomial& g) {
                          for (const auto& c : g.poly->components())
                            if (c.degree() > 0) return static_cast<double>(c.degree());
                          return 2.0;
                        },
                        [](const SumOf& g) {
                          double e = std::numeric_limits<double>::infinity();
                          for (const auto& t : g.terms) e = std::min(e, t.lower_exponent());
                          return e;
                        },
                        [](const ScaledBy& g) { return g.inner->lower_exponent(); },
                    },
                    node_);
}

double IntegrandSpec::upper_exponent() const {
  return std::visit(Overloaded{
                        [](const PowerNorm& g) { return g.p; },
                        [](const AxisPower& g) { return g.q; },
                        [](const EvenPolynomial& g) { return static_cast<double>(g.poly->degree()); },
                        [](const SumOf& g) {
                          double e = 0.0;
                          for (const auto& t : g.terms) e = std::max(e, t.upper_exponent());
                          return e;
                        },
                        [](const ScaledBy& g) { return g.inner->upper_exponent(); },
                    },
                    node_);
}

void IntegrandSpec::check_shape(int rows, int cols) const {
  std::visit(Overloaded{
                 [](const PowerNorm&) {},
                 [&](const AxisPower& g) {
                   if (g.axis >= cols)
                     throw Error(Errc::shape_mismatch, "axis index " + std::to_string(g.axis + 1) +
                                                           " exceeds n=" + std::to_string(cols));
                 },
                 [&](const EvenPolynomial& g) {
                   if (g.poly->dim() != rows * cols)
                     throw Error(Errc::shape_mismatch, "polynomial has " + std::to_string(g.poly->dim()) +
                                                           " variables, expected " + std::to_string(rows * cols));
                 },
                 [&](const SumOf& g) {
                   for (const auto& t : g.terms) t.check_shape(rows, cols);
                 },
                 [&](const ScaledBy& g) { g.inner->check_shape(rows, cols); },
             },
             node_);
}

Derivs evaluate(const IntegrandSpec& f, const GradMat& z, int order) {
  f.check_shape(static_cast<int>(z.rows()), static_cast<int>(z.cols()));
  Derivs out;
  eval_node(f, flatten(z), static_cast<int>(z.rows()), static_cast<int>(z.cols()), order, out);
  require_finite(out.value, "integrand value is not finite");
  return out;
}

double ell_mu(double mu, const GradMat& z) { return std::sqrt(mu * mu + z.squaredNorm()); }

GradMat v_map(double mu, double gamma, const GradMat& z) {
  const double sq = mu * mu + z.squaredNorm();
  if (sq == 0.0) return GradMat::Zero(z.rows(), z.cols());
  return std::pow(sq, (gamma - 2.0) / 4.0) * z;
}

double eval(const IntegrandSpec& f, const GradMat& z) { return evaluate(f, z, 0).value; }

GradMat gradient(const IntegrandSpec& f, const GradMat& z) {
  return unflatten(evaluate(f, z, 1).grad, static_cast<int>(z.rows()), static_cast<int>(z.cols()));
}

Eigen::MatrixXd hessian(const IntegrandSpec& f, const GradMat& z) { return evaluate(f, z, 2).hess; }

FdCheck fd_check(const IntegrandSpec& f, const GradMat& z, double h) {
  if (!(h > 0.0)) throw Error(Errc::domain_violation, "fd_check needs h > 0");
  const Derivs exact = evaluate(f, z, 2);
  const Eigen::VectorXd x = flatten(z);
  const int rows = static_cast<int>(z.rows());
  const int cols = static_cast<int>(z.cols());
  FdCheck out;
  for (Eigen::Index k = 0; k < x.size(); ++k) {
    Eigen::VectorXd xp = x, xm = x;
    xp[k] += h;
    xm[k] -= h;
    const Derivs dp = evaluate(f, unflatten(xp, rows, cols), 1);
    const Derivs dm = evaluate(f, unflatten(xm, rows, cols), 1);
    out.grad_err = std::max(out.grad_err, std::abs((dp.value - dm.value) / (2.0 * h) - exact.grad[k]));
    const Eigen::VectorXd col = (dp.grad - dm.grad) / (2.0 * h);
    out.hess_err = std::max(out.hess_err, (col - exact.hess.col(k)).cwiseAbs().maxCoeff());
  }
  return out;
}

MoserWeightValue moser_weight_eval(const MoserWeight& w, const GradMat& z) {
  if (!(w.alpha >= -1.0)) throw Error(Errc::domain_violation, "moser weight needs alpha >= -1");
  const double p = w.regime.p;
  const double ell = ell_mu(w.regime.mu, z);
  MoserWeightValue out;
  out.L = std::pow(ell, p);
  const double e = (w.alpha + 2.0) / 2.0;
  out.l_alpha = std::pow(out.L, e) + 1.0;
  // d l = e L^{e-1} dL and dL = p ell^{p-2} <z, dz>; L^{e-1} ell^{p-2} = ell^{p e - 2}.
  const double expo = p * e - 2.0;
  if (ell > 0.0) {
    out.grad_factor = e * p * std::pow(ell, expo);
  } else {
    out.grad_factor = expo == 0.0 ? e * p : (expo > 0.0 ? 0.0 : std::numeric_limits<double>::infinity());
  }
  return out;
}

Polynomial marcellini_polynomial(int n, int q) {
  std::vector<Monomial> terms;
  for (int i = 0; i < n; ++i) {
    std::vector<int> sq(static_cast<std::size_t>(n), 0), qq(static_cast<std::size_t>(n), 0);
    sq[static_cast<std::size_t>(i)] = 2;
    qq[static_cast<std::size_t>(i)] = q;
    terms.push_back({1.0, sq});
    terms.push_back({1.0, qq});
  }
  return Polynomial::from_monomials(n, terms);
}

namespace {

std::vector<BuiltinExample> make_builtins() {
  std::vector<BuiltinExample> out;
  // Registered constants: sampled sup over check_legendre and the growth
  // sandwich (radius 1e3, 10^4 samples), rounded up with a 25% margin.
  out.push_back({"marcellini_q4",
                 IntegrandSpec::power(0.0, 2.0) + IntegrandSpec::axis(0, 4.0) + IntegrandSpec::axis(1, 4.0),
                 Regime{2, 1, 2.0, 4.0, 0.0, 6.0}});
  out.push_back({"marcellini_poly", IntegrandSpec::polynomial(marcellini_polynomial(2, 4)),
                 Regime{2, 1, 2.0, 4.0, 0.0, 6.0}});
  out.push_back({"vector_q4",
                 IntegrandSpec::power(0.0, 2.0) + IntegrandSpec::axis(0, 4.0) + IntegrandSpec::axis(1, 4.0),
                 Regime{2, 2, 2.0, 4.0, 0.0, 6.0}});
  out.push_back({"nondegenerate_q6", IntegrandSpec::power(1.0, 2.0) + IntegrandSpec::axis(1, 6.0),
                 Regime{2, 1, 2.0, 6.0, 1.0, 9.0}});
  {
    const std::vector<Monomial> terms{{1.0, {4, 0}}, {2.0, {2, 2}}, {1.0, {0, 4}}, {1.0, {6, 0}}};
    out.push_back({"degenerate_p4", IntegrandSpec::polynomial(Polynomial::from_monomials(2, terms)),
                   Regime{2, 1, 4.0, 6.0, 0.0, 9.0}});
  }
  return out;
}

}  // namespace

const std::vector<BuiltinExample>& builtin_examples() {
  static const std::vector<BuiltinExample> examples = make_builtins();
  return examples;
}

const BuiltinExample& builtin_example(const std::string& name) {
  for (const auto& b : builtin_examples())
    if (b.name == name) return b;
  throw Error(Errc::config_semantic, "unknown built-in example '" + name + "'");
}

}  // namespace lpq
