#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "lpq/integrands.hpp"
#include "lpq/parallel.hpp"

namespace lpq {

inline constexpr double kConjugateTol = 1e-10;
inline constexpr int kConjugateMaxIters = 200;

struct ConjugateResult {
  double value = 0.0;  // F*(xi)
  GradMat argmax;      // maximizer z* with F'(z*) = xi
  int newton_iters = 0;
  double residual = 0.0;  // |xi - F'(argmax)|
};

/// sup_z <z, xi> - F(z) by damped Newton. Converged when the residual is at
/// most tol * max(1, |xi|).
ConjugateResult conjugate(const IntegrandSpec& f, const GradMat& xi, double tol = kConjugateTol,
                          int max_iters = kConjugateMaxIters);

GradMat inverse_gradient(const IntegrandSpec& f, const GradMat& xi, double tol = kConjugateTol);

/// F''(z)^{-1}, i.e. the hessian of F* at F'(z).
Eigen::MatrixXd conjugate_hessian(const IntegrandSpec& f, const GradMat& z);

double fenchel_young_gap(const IntegrandSpec& f, const GradMat& z, const GradMat& xi,
                         double tol = kConjugateTol);

/// sup_xi <z, xi> - F*(xi), evaluated through nested conjugations.
double biconjugate(const IntegrandSpec& f, const GradMat& z, double tol = kConjugateTol);

std::optional<double> monotonicity_ratio(const IntegrandSpec& f, const Regime& r, const GradMat& z1,
                                         const GradMat& z2);

/// Point value w and its partial derivatives d_s w, s = 1..n.
struct SecondOrderSample {
  GradMat w;
  std::vector<GradMat> dw;
};

/// Min over samples of sum_s <F''(w) d_s w, d_s w> divided by the squared
/// derivatives of the two V-fields (directional central differences).
/// Empty when every sample has a vanishing denominator.
std::optional<double> second_order_bound(const IntegrandSpec& f, const Regime& r,
                                         std::span<const SecondOrderSample> samples);

struct ProbeOptions {
  int rows = 1;
  int cols = 2;
  double radius = 3.0;
  double tol = 1e-8;
  std::uint64_t seed = 1;
};

/// Checks F(z+z0)-F(z0)-<F'(z0),z> <= G(z+w)-G(w)-<G'(w),z>, w = (G*)'(F'(z0)).
CheckReport conjugate_difference_probe(const IntegrandSpec& f, const IntegrandSpec& g, int samples,
                                       const ProbeOptions& opts = {});

// Batch samplers shared by tests, the acceptance binary and the CLI.

struct RoundTripStats {
  double worst_scaled_error = 0.0;  // max |z' - z| / (1 + |z|)
  int max_newton_iters = 0;
  GradMat worst_point;
};

RoundTripStats round_trip_sample(const IntegrandSpec& f, const Regime& r, int samples, double radius,
                                 std::uint64_t seed, Exec exec = Exec::parallel);

struct SandwichStats {
  int violations = 0;
  int samples = 0;
  double worst_lower_margin = 0.0;  // min over samples of lambda_min / lower bound
  double worst_upper_margin = 0.0;  // min over samples of upper bound / lambda_max
  std::optional<GradMat> witness;
};

/// Eigenvalues of F''(z)^{-1} against [ell_1(F'(z))^{q'-2} / (2L), L ell_mu(z)^{2-p}].
/// z is sampled log-uniformly in [1e-6, radius] so the 1e-6 ball is excluded.
SandwichStats dualbound_sample(const IntegrandSpec& f, const Regime& r, int samples, double radius,
                               std::uint64_t seed, Exec exec = Exec::parallel);

struct MonotonicityStats {
  double infimum = 0.0;
  int pairs_used = 0;
  GradMat witness_z1;
  GradMat witness_z2;
};

MonotonicityStats monotonicity_sample(const IntegrandSpec& f, const Regime& r, int pairs,
                                      double radius, std::uint64_t seed, Exec exec = Exec::parallel);

}  // namespace lpq
