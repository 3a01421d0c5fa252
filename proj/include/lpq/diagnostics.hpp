#pragma once

#include <optional>
#include <span>
#include <vector>

#include "lpq/integrands.hpp"

namespace lpq {

struct ExponentChain {
  Regime regime;
  double sobolev_exp = 0.0;
  double lambda = 0.0;
  double beta0 = 0.0;
  double alpha0 = 0.0;
  double kappa1 = 0.0;
  double kappa2 = 0.0;
  double b = 0.0;
};

/// Throws Errc::inadmissible_sobolev_exponent unless lambda lies in (0,1].
ExponentChain hd_exponents(const Regime& r, double sobolev_exp);

struct VFields {
  std::vector<GradMat> vp;  // V_{mu,p}(grad u) per simplex
  std::vector<GradMat> vq;  // V_{1,q'}(F'(grad u)) per simplex
};

VFields v_fields(const DiscreteField& field, const IntegrandSpec& f, const Regime& r);

/// Per-cell squared dual-grid gradient norms of the two V-fields. Cells
/// outside `region` (by center) get no value; differences are one-sided at
/// the region's edge.
struct CellGradients {
  std::vector<std::size_t> cells;
  std::vector<double> grad_vp_sq;
  std::vector<double> grad_vq_sq;
};

CellGradients v_field_gradients(const DiscreteField& field, const IntegrandSpec& f, const Regime& r,
                                const Region& region);

/// Mean of F(grad u) over simplices whose barycenter lies in the region.
double region_average_energy(const DiscreteField& field, const IntegrandSpec& f, const Region& region);

DiagnosticEntry higher_diff_measure(const DiscreteField& field, const IntegrandSpec& f, const Regime& r,
                                    const ExponentChain& chain, const Region& ball);

/// lhs = max |grad u| over simplices in ball/8, rhs = (avg_ball F + 1)^b.
DiagnosticEntry sup_grad_measure(const DiscreteField& field, const IntegrandSpec& f, const Region& ball,
                                 double b = 1.0);

struct LogFit {
  double slope = 0.0;
  double intercept = 0.0;
  double residual = 0.0;  // root mean square of the log residuals
};

/// Least squares of log y against log x; needs at least two positive pairs.
LogFit fit_log_log(std::span<const double> x, std::span<const double> y);

struct ReverseHolderScan {
  std::vector<double> t_grid;
  std::vector<double> ratios;  // worst ratio over fields per t
  std::optional<double> best_t;
  double gehring_t = 0.0;      // prediction with empirical M, c* = q/p, m = 1/2
  double empirical_M = 1.0;
};

ReverseHolderScan reverse_holder_scan(std::span<const DiscreteField> fields, const IntegrandSpec& f,
                                      const Regime& r, std::span<const double> t_grid, const Region& ball,
                                      double b, double cap);

struct LogDecayProfile {
  std::vector<double> radii;
  std::vector<double> masses;
  double decay_exponent = 0.0;  // gamma + 2 with gamma = (q+p)/(2q)
  double fitted_c = 0.0;
  double fit_residual = 0.0;
  std::optional<double> free_exponent;  // unconstrained slope of log mass vs log log(r/sigma)
};

/// Balls B_sigma share the center of `ball`; radii must be decreasing, at
/// least three, and inside ball/2.
LogDecayProfile log_decay_profile(const DiscreteField& field, const IntegrandSpec& f, const Regime& r,
                                  std::span<const double> radii, const Region& ball);

struct CaccioppoliResult {
  double lhs = 0.0;
  double rhs = 0.0;
  double ratio = 0.0;
  double a_alpha = 1.0;
  double M = 1.0;
};

double moser_a_alpha(double alpha, double alpha0);

/// Cutoff is 1 on `inner`, 0 outside `outer`, linear in between.
CaccioppoliResult caccioppoli_check(const DiscreteField& field, const IntegrandSpec& f, const Regime& r,
                                    double alpha, const Region& inner, const Region& outer,
                                    double alpha0 = -1.0);

struct MoserParams {
  double alpha0 = -1.0;
  double gamma = 0.5;
  double c0 = 1.0;
  double M = 1.0;
  double tau1 = 1.0;
  double tau2 = 0.125;
  void validate() const;
};

/// (n-3)/(n-1) for n >= 4, otherwise p/(2q).
double moser_gamma(int n, double p, double q);

double moser_alpha_sequence(const MoserParams& params, int i);

struct MoserBound {
  double bound = 0.0;
  double m_exponent = 0.0;  // gamma / ((2 + alpha0)(1 - gamma))
  double a0 = 0.0;          // 4(gamma+1) / ((1-gamma)^2 (2+alpha0))
  double series = 0.0;      // sum_{j>=1} j gamma^j, truncated
  int series_terms = 0;
};

MoserBound moser_bound(const MoserParams& params, double v0);

/// Nonnegative values on the cells of a uniform grid over the unit cube.
struct CubeData {
  int dim = 2;
  int cells = 2;
  std::vector<double> values;
};

CubeData cube_data_from_field(const DiscreteField& field, const IntegrandSpec& f, const Regime& r);

struct GehringResult {
  double t = 1.0;
  double c_star = 1.0;
  double lhs = 0.0;  // (avg_{Q_1/2} v^t)^{1/t}
  double rhs = 0.0;  // 2^{4n+4} avg_{Q_1} v
  bool holds = false;
  int cubes_checked = 0;
};

/// Smallest c with avg_{Q/2} v <= c (avg_Q v^m)^{1/m} over the checked
/// sub-cubes (0 when no cube qualifies).
double reverse_holder_constant(const CubeData& v, double m);

/// Verifies the reverse Holder hypothesis on aligned sub-cubes (throws
/// Errc::precondition_violation with the failing cube), then the improved
/// inequality with t from gehring_exponent(max(c_hat, s0), M, m).
GehringResult gehring_selfimprove(const CubeData& v, double M, double m, double c_hat, double s0);

double stress_integrability(const DiscreteField& field, const IntegrandSpec& f, const Regime& r,
                            const Region& ball);

}  // namespace lpq
