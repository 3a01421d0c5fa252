#include "lpq/growth.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "lpq/sampling.hpp"

namespace lpq {

EllipticityEigs ellipticity_eigs(const IntegrandSpec& f, const GradMat& z) {
  const Eigen::MatrixXd h = hessian(f, z);
  if (!h.allFinite()) throw Error(Errc::non_finite, "hessian is not finite");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(h, Eigen::EigenvaluesOnly);
  return {eig.eigenvalues().minCoeff(), eig.eigenvalues().maxCoeff()};
}

double ellipticity_ratio(const IntegrandSpec& f, const GradMat& z) {
  const auto e = ellipticity_eigs(f, z);
  if (!(e.lambda_min > 0.0)) throw Error(Errc::degenerate_point, "lowest hessian eigenvalue vanishes");
  return e.lambda_max / e.lambda_min;
}

namespace {

struct SampleEval {
  double assf3 = 0.0;
  double assf1 = 0.0;
  double elr = 0.0;
  double fprime = 0.0;
  bool lower_ok = true;
  bool growth_ok = true;
};

std::string describe_point(const GradMat& z) {
  std::ostringstream os;
  os.precision(6);
  os << "[";
  for (Eigen::Index i = 0; i < z.size(); ++i) os << (i ? "," : "") << z.data()[i];
  os << "]";
  return os.str();
}

}  // namespace

LegendreCertificate check_legendre(const IntegrandSpec& f, const Regime& r, const CheckOptions& opts) {
  require_strict_exponents(r);
  if (opts.samples < 1 || !(opts.radius > 0.0))
    throw Error(Errc::domain_violation, "check_legendre needs samples >= 1 and radius > 0");
  f.check_shape(r.N, r.n);
  Rng rng(opts.seed);
  const double r_min = std::min(opts.r_min, opts.radius);
  std::vector<GradMat> pts;
  pts.reserve(static_cast<std::size_t>(opts.samples));
  for (int i = 0; i < opts.samples; ++i) pts.push_back(random_log_uniform(rng, r.N, r.n, r_min, opts.radius));

  const double e3 = (r.q - 2.0) / (r.q - 1.0);
  const double e1 = (r.q - r.p) / (r.q - 1.0);
  const double rel = 1e-12;  // roundoff slack for the pointwise inequalities
  std::vector<SampleEval> ev(pts.size());
  for_each_index(opts.exec, pts.size(), [&](std::size_t i) {
    const GradMat& z = pts[i];
    const Derivs d = evaluate(f, z, 2);
    if (!d.hess.allFinite() || !d.grad.allFinite()) throw Error(Errc::non_finite, "non-finite derivatives");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(d.hess, Eigen::EigenvaluesOnly);
    const double lmin = eig.eigenvalues().minCoeff();
    const double lmax = eig.eigenvalues().maxCoeff();
    const double g = d.grad.norm();
    const double ell = ell_mu(r.mu, z);
    const double elp = std::pow(ell, r.p);
    SampleEval& s = ev[i];
    s.assf3 = lmax / (1.0 + std::pow(g, e3));
    s.assf1 = (lmax / std::pow(ell, r.p - 2.0)) / (1.0 + std::pow(g, e1));
    s.elr = lmin > 0.0 ? (lmax / lmin) / (1.0 + std::pow(g, e1)) : std::numeric_limits<double>::infinity();
    s.fprime = g / (std::pow(ell, r.p - 1.0) + std::pow(ell, r.q - 1.0));
    s.lower_ok = lmin >= (1.0 - rel) * std::pow(ell, r.p - 2.0) / r.L;
    s.growth_ok = d.value >= (1.0 - rel) * elp / r.L &&
                  d.value <= (1.0 + rel) * r.L * (elp + std::pow(ell, r.q));
  });

  LegendreCertificate cert;
  cert.regime = r;
  cert.samples = opts.samples;
  std::size_t arg3 = 0, arg1 = 0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const auto& s = ev[i];
    if (s.assf3 > cert.constant_assf3) {
      cert.constant_assf3 = s.assf3;
      arg3 = i;
    }
    if (s.assf1 > cert.constant_assf1) {
      cert.constant_assf1 = s.assf1;
      arg1 = i;
    }
    cert.constant_elr = std::max(cert.constant_elr, s.elr);
    cert.constant_fprime = std::max(cert.constant_fprime, s.fprime);
    if (!s.lower_ok && cert.lower_bound_ok) {
      cert.lower_bound_ok = false;
      cert.witness = pts[i];
      cert.failure = "lower ellipticity bound violated at " + describe_point(pts[i]);
    }
    if (!s.growth_ok && cert.growth_ok) {
      cert.growth_ok = false;
      if (!cert.witness) {
        cert.witness = pts[i];
        cert.failure = "growth sandwich violated at " + describe_point(pts[i]);
      }
    }
  }
  cert.worst_points = {pts[arg3], pts[arg1]};
  const bool finite = std::isfinite(cert.constant_assf3) && std::isfinite(cert.constant_assf1) &&
                      std::isfinite(cert.constant_elr);
  const bool upper_ok = cert.constant_assf3 <= r.L;
  if (!upper_ok && cert.failure.empty()) {
    cert.witness = pts[arg3];
    cert.failure = "upper hessian bound exceeds L at " + describe_point(pts[arg3]);
  }
  cert.passed = cert.lower_bound_ok && cert.growth_ok && finite && upper_ok;
  return cert;
}

std::vector<GradedComponent> homogeneous_decomposition(const Polynomial& poly, int sphere_samples,
                                                       std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Eigen::VectorXd> dirs;
  for (int i = 0; i < sphere_samples; ++i) dirs.push_back(flatten(random_direction(rng, poly.dim(), 1)));
  std::vector<GradedComponent> out;
  for (const auto& c : poly.components()) {
    if (c.degree() % 2 != 0 && !c.is_zero())
      throw Error(Errc::not_even, "component of odd degree " + std::to_string(c.degree()));
    GradedComponent gc{c.degree(), c, true};
    for (const auto& w : dirs) {
      if (c.eval(w) < -1e-12) {
        gc.nonnegative = false;
        break;
      }
    }
    out.push_back(std::move(gc));
  }
  return out;
}

PolynomialGrowth polynomial_growth_exponents(const Polynomial& poly, int samples, double radius,
                                             std::uint64_t seed) {
  const auto comps = homogeneous_decomposition(poly, 2048, seed);
  PolynomialGrowth out;
  bool have_low = false;
  for (const auto& c : comps) {
    if (!c.nonnegative)
      throw Error(Errc::precondition_violation, "component of degree " + std::to_string(c.degree) +
                                                    " is negative on the sphere");
    if (c.degree > 0 && !have_low) {
      out.p_max = c.degree;
      have_low = true;
    }
  }
  if (!have_low) throw Error(Errc::precondition_violation, "polynomial is constant");
  const int top = poly.degree();
  out.q = top;
  Rng rng(seed + 1);
  const double e = (top - 2.0) / (top - 1.0);
  for (int i = 0; i < samples; ++i) {
    const Eigen::VectorXd x = flatten(random_log_uniform(rng, poly.dim(), 1, 1e-3, radius));
    double v = 0.0;
    Eigen::VectorXd g;
    Eigen::MatrixXd h;
    poly.evaluate(x, 2, v, &g, &h);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(h, Eigen::EigenvaluesOnly);
    const double lmin = eig.eigenvalues().minCoeff();
    const double lmax = eig.eigenvalues().maxCoeff();
    if (lmin < -1e-10 * std::max(1.0, lmax))
      throw Error(Errc::precondition_violation, "polynomial hessian is not positive semidefinite");
    out.c = std::max(out.c, std::max(std::abs(lmin), std::abs(lmax)) / (1.0 + std::pow(g.norm(), e)));
  }
  return out;
}

DeltaEstimate delta_of_homogeneous(const IntegrandSpec& h, int s, int rows, int cols, int sphere_samples,
                                   std::uint64_t seed) {
  if (s < 2) throw Error(Errc::domain_violation, "delta needs degree s >= 2");
  const int dim = rows * cols;
  Rng rng(seed);
  Eigen::MatrixXd grads(dim, sphere_samples);
  double hmax = 0.0;
  for (int i = 0; i < sphere_samples; ++i) {
    const Derivs d = evaluate(h, random_direction(rng, rows, cols), 1);
    grads.col(i) = d.grad;
    hmax = std::max(hmax, std::abs(d.value));
  }
  if (hmax == 0.0) throw Error(Errc::degenerate_form, "form vanishes on all samples");
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(grads, Eigen::ComputeThinU);
  const auto& sv = svd.singularValues();
  int rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv[i] > 1e-10 * sv[0]) ++rank;
  if (rank == 0) throw Error(Errc::degenerate_form, "gradient span is trivial");
  const Eigen::MatrixXd basis = svd.matrixU().leftCols(rank);

  DeltaEstimate out;
  out.span_dim = rank;
  double min_ratio = std::numeric_limits<double>::infinity();
  double min_radius = std::numeric_limits<double>::infinity();
  for (int i = 0; i < sphere_samples; ++i) {
    const Eigen::VectorXd coords = flatten(random_direction(rng, rank, 1));
    const GradMat w = unflatten(basis * coords, rows, cols);
    const Derivs d = evaluate(h, w, 1);
    const double gn = d.grad.norm();
    if (gn == 0.0 || d.value <= 0.0) continue;
    const double ratio = (s * d.value / gn) * (s * d.value / gn);
    min_ratio = std::min(min_ratio, ratio);
    min_radius = std::min(min_radius, std::pow(d.value, -1.0 / s));
  }
  if (!std::isfinite(min_ratio)) throw Error(Errc::degenerate_form, "form not positive on its span");
  out.delta = std::min(std::sqrt(std::max(0.0, 1.0 - min_ratio)), std::nextafter(1.0, 0.0));
  out.sigma = min_radius;
  return out;
}

SumGrowth sum_growth(const IntegrandSpec& q_spec, const Regime& q_regime, const IntegrandSpec& h, int s,
                     const CheckOptions& opts) {
  check_regime(q_regime);
  Regime combined = q_regime;
  combined.q = std::max(q_regime.q, static_cast<double>(s));
  if (combined.p == combined.q)
    throw Error(Errc::equal_exponents, "sum has equal exponents p = q = " + std::to_string(combined.p));
  SumGrowth out{combined, check_legendre(q_spec + h, combined, opts)};
  return out;
}

double gehring_exponent(double c0, double M, double m) {
  if (!(c0 >= 1.0) || !(M >= 1.0) || !(m > 0.0 && m < 1.0) || !std::isfinite(c0 * M))
    throw Error(Errc::domain_violation, "gehring_exponent needs c0 >= 1, M >= 1, 0 < m < 1");
  return (2.0 * c0 * M - m) / (2.0 * c0 * M - 1.0);
}

}  // namespace lpq
