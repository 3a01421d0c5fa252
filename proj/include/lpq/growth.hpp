#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "lpq/integrands.hpp"
#include "lpq/parallel.hpp"

namespace lpq {

struct EllipticityEigs {
  double lambda_min = 0.0;
  double lambda_max = 0.0;
};

EllipticityEigs ellipticity_eigs(const IntegrandSpec& f, const GradMat& z);
/// Throws Errc::degenerate_point when lambda_min == 0.
double ellipticity_ratio(const IntegrandSpec& f, const GradMat& z);

/// Empirical certificate; constants are sampled suprema, not proofs.
struct LegendreCertificate {
  Regime regime;
  double constant_assf3 = 0.0;  // sup |F''| / (1 + |F'|^{(q-2)/(q-1)})
  double constant_assf1 = 0.0;  // sup (|F''| / ell_mu^{p-2}) / (1 + |F'|^{(q-p)/(q-1)})
  double constant_elr = 0.0;    // sup R_F / (1 + |F'|^{(q-p)/(q-1)})
  double constant_fprime = 0.0; // sup |F'| / (ell_mu^{p-1} + ell_mu^{q-1})
  int samples = 0;
  std::vector<GradMat> worst_points;  // maximizers for assf3 and assf1
  std::optional<double> delta;
  bool lower_bound_ok = true;
  bool growth_ok = true;
  bool passed = false;
  std::optional<GradMat> witness;  // first failing sample
  std::string failure;
};

struct CheckOptions {
  int samples = 10000;
  double r_min = 1e-3;
  double radius = 1e3;
  std::uint64_t seed = 1;
  Exec exec = Exec::parallel;
};

/// Throws Errc::equal_exponents when p == q.
LegendreCertificate check_legendre(const IntegrandSpec& f, const Regime& r, const CheckOptions& opts = {});

struct GradedComponent {
  int degree = 0;
  HomogeneousForm form;
  bool nonnegative = true;  // on sampled sphere directions
};

/// Throws Errc::not_even on a nonzero odd-degree component.
std::vector<GradedComponent> homogeneous_decomposition(const Polynomial& poly,
                                                       int sphere_samples = 2048,
                                                       std::uint64_t seed = 1);

struct PolynomialGrowth {
  double q = 0.0;
  double p_max = 0.0;
  double c = 0.0;  // sup |P''| / (1 + |P'|^{(2d-2)/(2d-1)})
};

/// Throws Errc::precondition_violation if a component is negative somewhere
/// on the sphere or the hessian fails to be positive semidefinite.
PolynomialGrowth polynomial_growth_exponents(const Polynomial& poly, int samples = 10000,
                                             double radius = 1e2, std::uint64_t seed = 1);

struct DeltaEstimate {
  double delta = 0.0;
  double sigma = 0.0;  // inradius estimate of the sublevel body on the span
  int span_dim = 0;
};

/// H is s-homogeneous on rows x cols matrices.
DeltaEstimate delta_of_homogeneous(const IntegrandSpec& h, int s, int rows, int cols,
                                   int sphere_samples = 4096, std::uint64_t seed = 1);

struct SumGrowth {
  Regime regime;
  LegendreCertificate certificate;
};

/// (p, max(q, s)) for Q + H, re-certified with the regime constant of Q.
SumGrowth sum_growth(const IntegrandSpec& q_spec, const Regime& q_regime, const IntegrandSpec& h, int s,
                     const CheckOptions& opts = {});

double gehring_exponent(double c0, double M, double m);

}  // namespace lpq
