#include "lpq/duality.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Eigenvalues>

#include "lpq/sampling.hpp"

namespace lpq {

namespace {

constexpr double kConditionCap = 1e12;

/// Detects c * (mu^2 + |z|^2); returns {c, mu} when matched.
std::optional<std::pair<double, double>> quadratic_form(const IntegrandSpec& f) {
  if (const auto* p = std::get_if<PowerNorm>(&f.node())) {
    if (p->p == 2.0) return std::make_pair(1.0, p->mu);
  }
  if (const auto* s = std::get_if<ScaledBy>(&f.node())) {
    if (s->coeff > 0.0) {
      if (auto inner = quadratic_form(*s->inner)) return std::make_pair(s->coeff * inner->first, inner->second);
    }
  }
  return std::nullopt;
}

double flat_dot(const GradMat& a, const GradMat& b) { return (a.array() * b.array()).sum(); }

}  // namespace

ConjugateResult conjugate(const IntegrandSpec& f, const GradMat& xi, double tol, int max_iters) {
  if (!(tol > 0.0)) throw Error(Errc::domain_violation, "conjugate needs tol > 0");
  if (!xi.allFinite()) throw Error(Errc::non_finite, "conjugate: non-finite xi");
  const int rows = static_cast<int>(xi.rows());
  const int cols = static_cast<int>(xi.cols());
  f.check_shape(rows, cols);

  if (const auto quad = quadratic_form(f)) {
    const auto [c, mu] = *quad;
    ConjugateResult out;
    out.argmax = xi / (2.0 * c);
    out.value = xi.squaredNorm() / (4.0 * c) - c * mu * mu;
    out.residual = (xi - gradient(f, out.argmax)).norm();
    return out;
  }

  const Eigen::VectorXd x = flatten(xi);
  const double xi_norm = x.norm();
  const double tol_scaled = tol * std::max(1.0, xi_norm);
  double p = f.lower_exponent();
  if (!(p > 1.5) || !std::isfinite(p)) p = 2.0;
  Eigen::VectorXd z = Eigen::VectorXd::Zero(x.size());
  if (xi_norm > 0.0) z = x / std::max(1.0, xi_norm) * std::pow(xi_norm, 1.0 / (p - 1.0));

  auto objective = [&](const Eigen::VectorXd& v, Derivs& d) {
    d = evaluate(f, unflatten(v, rows, cols), 2);
    return v.dot(x) - d.value;
  };

  Derivs cur;
  double phi = objective(z, cur);
  Eigen::VectorXd r = x - cur.grad;
  double res = r.norm();
  Eigen::VectorXd best = z;
  double best_res = res;
  int polish = 0;
  int it = 0;
  for (; it < max_iters; ++it) {
    if (!std::isfinite(phi) || !std::isfinite(res)) throw Error(Errc::non_finite, "conjugate: non-finite iterate");
    if (res <= tol_scaled) {
      if (res == 0.0 || polish >= 2) break;
      ++polish;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cur.hess, Eigen::EigenvaluesOnly);
    const double lmin = eig.eigenvalues().minCoeff();
    const double lmax = eig.eigenvalues().maxCoeff();
    Eigen::VectorXd d;
    if (lmin > 0.0 && lmax / lmin <= kConditionCap) {
      d = cur.hess.ldlt().solve(r);
    } else {
      d = r;  // gradient ascent step
    }
    double t = 1.0;
    bool accepted = false;
    Derivs trial;
    for (int k = 0; k < 80; ++k, t *= 0.5) {
      const Eigen::VectorXd zt = z + t * d;
      const double phit = objective(zt, trial);
      const double rest = (x - trial.grad).norm();
      if (std::isfinite(phit) && (phit > phi || rest < res)) {
        z = zt;
        phi = phit;
        cur = std::move(trial);
        r = x - cur.grad;
        res = rest;
        accepted = true;
        break;
      }
    }
    if (res < best_res) {
      best_res = res;
      best = z;
    }
    if (!accepted) break;
  }
  if (best_res > tol_scaled)
    throw Error(Errc::non_convergence, "conjugate: residual " + std::to_string(best_res) + " after " +
                                           std::to_string(it) + " iterations");
  ConjugateResult out;
  out.argmax = unflatten(best, rows, cols);
  out.value = best.dot(x) - eval(f, out.argmax);
  out.newton_iters = it;
  out.residual = best_res;
  return out;
}

GradMat inverse_gradient(const IntegrandSpec& f, const GradMat& xi, double tol) {
  return conjugate(f, xi, tol).argmax;
}

Eigen::MatrixXd conjugate_hessian(const IntegrandSpec& f, const GradMat& z) {
  const Eigen::MatrixXd h = hessian(f, z);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(h, Eigen::EigenvaluesOnly);
  const double lmin = eig.eigenvalues().minCoeff();
  const double lmax = eig.eigenvalues().maxCoeff();
  if (!(lmin > 0.0) || lmax / lmin > kConditionCap)
    throw Error(Errc::singular_hessian, "hessian not invertible at the given point");
  return h.ldlt().solve(Eigen::MatrixXd::Identity(h.rows(), h.cols()));
}

double fenchel_young_gap(const IntegrandSpec& f, const GradMat& z, const GradMat& xi, double tol) {
  return eval(f, z) + conjugate(f, xi, tol).value - flat_dot(z, xi);
}

double biconjugate(const IntegrandSpec& f, const GradMat& z, double tol) {
  const int rows = static_cast<int>(z.rows());
  const int cols = static_cast<int>(z.cols());
  // psi(xi) = <z, xi> - F*(xi); grad = z - (F*)'(xi), hess = -F''(w)^{-1}.
  GradMat xi = GradMat::Zero(rows, cols);
  ConjugateResult c = conjugate(f, xi, tol);
  double psi = flat_dot(z, xi) - c.value;
  for (int it = 0; it < kConjugateMaxIters; ++it) {
    const GradMat g = z - c.argmax;
    const double gn = g.norm();
    if (gn <= tol * std::max(1.0, z.norm())) break;
    const Eigen::MatrixXd h = hessian(f, c.argmax);
    GradMat step = unflatten(h * flatten(g), rows, cols);
    // F''(w) vanishes at degenerate points; ascend along grad psi instead.
    if (!(step.norm() > 1e-12 * gn)) step = g;
    double t = 1.0;
    bool accepted = false;
    for (int k = 0; k < 80; ++k, t *= 0.5) {
      const GradMat xt = xi + t * step;
      const ConjugateResult ct = conjugate(f, xt, tol);
      const double psit = flat_dot(z, xt) - ct.value;
      if (psit > psi || (z - ct.argmax).norm() < gn) {
        xi = xt;
        c = ct;
        psi = psit;
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
  }
  return psi;
}

std::optional<double> monotonicity_ratio(const IntegrandSpec& f, const Regime& r, const GradMat& z1,
                                         const GradMat& z2) {
  if (z1 == z2) return std::nullopt;
  const GradMat g1 = gradient(f, z1);
  const GradMat g2 = gradient(f, z2);
  const double num = flat_dot(g1 - g2, z1 - z2);
  const double qc = r.q_conj();
  const double den = (v_map(r.mu, r.p, z1) - v_map(r.mu, r.p, z2)).squaredNorm() +
                     (v_map(1.0, qc, g1) - v_map(1.0, qc, g2)).squaredNorm();
  if (den == 0.0) return std::nullopt;
  return num / den;
}

std::optional<double> second_order_bound(const IntegrandSpec& f, const Regime& r,
                                         std::span<const SecondOrderSample> samples) {
  std::optional<double> best;
  const double qc = r.q_conj();
  for (const auto& s : samples) {
    const Eigen::MatrixXd h = hessian(f, s.w);
    double num = 0.0;
    double den = 0.0;
    for (const auto& d : s.dw) {
      const double dn = d.norm();
      if (dn == 0.0) continue;
      const Eigen::VectorXd dv = flatten(d);
      num += dv.dot(h * dv);
      const double step = 1e-6 * std::max(1.0, s.w.norm()) / dn;
      const GradMat wp = s.w + step * d;
      const GradMat wm = s.w - step * d;
      den += ((v_map(r.mu, r.p, wp) - v_map(r.mu, r.p, wm)) / (2.0 * step)).squaredNorm();
      den += ((v_map(1.0, qc, gradient(f, wp)) - v_map(1.0, qc, gradient(f, wm))) / (2.0 * step)).squaredNorm();
    }
    if (den == 0.0) continue;
    const double ratio = num / den;
    if (!best || ratio < *best) best = ratio;
  }
  return best;
}

CheckReport conjugate_difference_probe(const IntegrandSpec& f, const IntegrandSpec& g, int samples,
                                       const ProbeOptions& opts) {
  Rng rng(opts.seed);
  CheckReport rep;
  rep.worst_ratio = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < samples; ++i) {
    const GradMat z = random_in_ball(rng, opts.rows, opts.cols, opts.radius);
    const GradMat z0 = random_in_ball(rng, opts.rows, opts.cols, opts.radius);
    const GradMat fz0 = gradient(f, z0);
    const GradMat w = inverse_gradient(g, fz0);
    const double lhs = eval(f, z + z0) - eval(f, z0) - flat_dot(fz0, z);
    const double rhs = eval(g, z + w) - eval(g, w) - flat_dot(gradient(g, w), z);
    const double diff = lhs - rhs;
    if (diff > rep.worst_ratio) {
      rep.worst_ratio = diff;
      rep.witness = z;
    }
    if (diff > opts.tol * std::max(1.0, std::abs(lhs) + std::abs(rhs))) rep.passed = false;
  }
  return rep;
}

RoundTripStats round_trip_sample(const IntegrandSpec& f, const Regime& r, int samples, double radius,
                                 std::uint64_t seed, Exec exec) {
  Rng rng(seed);
  std::vector<GradMat> points;
  points.reserve(static_cast<std::size_t>(samples));
  for (int i = 0; i < samples; ++i) points.push_back(random_in_ball(rng, r.N, r.n, radius));
  std::vector<double> err(points.size());
  std::vector<int> iters(points.size());
  for_each_index(exec, points.size(), [&](std::size_t i) {
    const GradMat& z = points[i];
    const ConjugateResult c = conjugate(f, gradient(f, z));
    err[i] = (c.argmax - z).norm() / (1.0 + z.norm());
    iters[i] = c.newton_iters;
  });
  RoundTripStats out;
  out.worst_point = GradMat::Zero(r.N, r.n);
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (err[i] > out.worst_scaled_error) {
      out.worst_scaled_error = err[i];
      out.worst_point = points[i];
    }
    out.max_newton_iters = std::max(out.max_newton_iters, iters[i]);
  }
  return out;
}

SandwichStats dualbound_sample(const IntegrandSpec& f, const Regime& r, int samples, double radius,
                               std::uint64_t seed, Exec exec) {
  Rng rng(seed);
  std::vector<GradMat> points;
  points.reserve(static_cast<std::size_t>(samples));
  for (int i = 0; i < samples; ++i) points.push_back(random_log_uniform(rng, r.N, r.n, 1e-6, radius));
  std::vector<double> lower(points.size()), upper(points.size());
  const double qc = r.q_conj();
  for_each_index(exec, points.size(), [&](std::size_t i) {
    const GradMat& z = points[i];
    const Derivs d = evaluate(f, z, 2);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(d.hess, Eigen::EigenvaluesOnly);
    // eigenvalues of the inverse are the reciprocals
    const double inv_min = 1.0 / eig.eigenvalues().maxCoeff();
    const double inv_max = 1.0 / eig.eigenvalues().minCoeff();
    const double lo = std::pow(1.0 + d.grad.squaredNorm(), (qc - 2.0) / 2.0) / (2.0 * r.L);
    const double hi = r.L * std::pow(ell_mu(r.mu, z), 2.0 - r.p);
    lower[i] = inv_min / lo;
    upper[i] = hi / inv_max;
  });
  SandwichStats out;
  out.samples = samples;
  out.worst_lower_margin = std::numeric_limits<double>::infinity();
  out.worst_upper_margin = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < points.size(); ++i) {
    const bool bad = !(lower[i] >= 1.0) || !(upper[i] >= 1.0);
    if (bad) {
      ++out.violations;
      if (!out.witness) out.witness = points[i];
    }
    out.worst_lower_margin = std::min(out.worst_lower_margin, lower[i]);
    out.worst_upper_margin = std::min(out.worst_upper_margin, upper[i]);
  }
  return out;
}

MonotonicityStats monotonicity_sample(const IntegrandSpec& f, const Regime& r, int pairs,
                                      double radius, std::uint64_t seed, Exec exec) {
  Rng rng(seed);
  std::vector<std::pair<GradMat, GradMat>> pts;
  pts.reserve(static_cast<std::size_t>(pairs));
  for (int i = 0; i < pairs; ++i) {
    GradMat z1 = random_in_ball(rng, r.N, r.n, radius);
    GradMat z2 = z1 + random_log_uniform(rng, r.N, r.n, 1e-3, 2.0 * radius);
    pts.emplace_back(std::move(z1), std::move(z2));
  }
  std::vector<double> ratio(pts.size(), std::numeric_limits<double>::infinity());
  for_each_index(exec, pts.size(), [&](std::size_t i) {
    if (auto v = monotonicity_ratio(f, r, pts[i].first, pts[i].second)) ratio[i] = *v;
  });
  MonotonicityStats out;
  out.infimum = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (!std::isfinite(ratio[i])) continue;
    ++out.pairs_used;
    if (ratio[i] < out.infimum) {
      out.infimum = ratio[i];
      out.witness_z1 = pts[i].first;
      out.witness_z2 = pts[i].second;
    }
  }
  return out;
}

}  // namespace lpq
