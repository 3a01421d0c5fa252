#include "lpq/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "lpq/growth.hpp"

namespace lpq {

ExponentChain hd_exponents(const Regime& r, double sobolev_exp) {
  check_regime(r);
  const double p = r.p, q = r.q, s = sobolev_exp, n = r.n;
  ExponentChain c;
  c.regime = r;
  c.sobolev_exp = s;
  if (!(s > 2.0)) throw Error(Errc::inadmissible_sobolev_exponent, "sobolev exponent must exceed 2");
  c.lambda = (p * s - 2.0 * q) / (p * (s - 2.0));
  if (!(c.lambda > 0.0 && c.lambda <= 1.0))
    throw Error(Errc::inadmissible_sobolev_exponent, "lambda outside (0,1]; need s > 2q/p");
  c.beta0 = (p * (1.0 - c.lambda) / (2.0 * q)) * (n - 1.0 - s * (n - 3.0) / 2.0);
  c.alpha0 = 2.0 * q * c.beta0 / (c.lambda * p);
  c.kappa1 = (3.0 * q - p) / (c.lambda * p);
  c.kappa2 = (q - p) / (c.lambda * p);
  c.b = c.kappa2 + 1.0;
  return c;
}

VFields v_fields(const DiscreteField& field, const IntegrandSpec& f, const Regime& r) {
  const std::size_t ns = field.grid().simplex_count();
  VFields out;
  out.vp.reserve(ns);
  out.vq.reserve(ns);
  const double qc = r.q_conj();
  for (std::size_t s = 0; s < ns; ++s) {
    const GradMat g = field.gradient(s);
    out.vp.push_back(v_map(r.mu, r.p, g));
    out.vq.push_back(v_map(1.0, qc, gradient(f, g)));
  }
  return out;
}

namespace {

/// Mean of per-simplex values over each cell.
std::vector<Eigen::VectorXd> cell_means(const Grid& grid, const std::vector<GradMat>& per_simplex) {
  const int spc = grid.simplices_per_cell();
  std::vector<Eigen::VectorXd> out(grid.cell_count());
  for (std::size_t c = 0; c < grid.cell_count(); ++c) {
    Eigen::VectorXd acc = flatten(per_simplex[c * spc]);
    for (int k = 1; k < spc; ++k) acc += flatten(per_simplex[c * spc + k]);
    out[c] = acc / spc;
  }
  return out;
}

std::vector<char> cell_mask(const Grid& grid, const Region& region) {
  std::vector<char> mask(grid.cell_count(), 0);
  for (std::size_t c = 0; c < grid.cell_count(); ++c) mask[c] = region.contains(grid.cell_center(c)) ? 1 : 0;
  return mask;
}

/// Squared norm of the dual-grid gradient at a masked cell.
double cell_grad_sq(const Grid& grid, const std::vector<Eigen::VectorXd>& vals, const std::vector<char>& mask,
                    std::size_t cell) {
  const auto idx = grid.cell_index(cell);
  const double h = grid.spacing();
  double acc = 0.0;
  for (int k = 0; k < grid.dim(); ++k) {
    auto lo = idx, hi = idx;
    --lo[k];
    ++hi[k];
    const bool has_lo = lo[k] >= 0 && mask[grid.cell_at(lo)];
    const bool has_hi = hi[k] < grid.cells_per_side() && mask[grid.cell_at(hi)];
    if (has_lo && has_hi) {
      acc += ((vals[grid.cell_at(hi)] - vals[grid.cell_at(lo)]) / (2.0 * h)).squaredNorm();
    } else if (has_hi) {
      acc += ((vals[grid.cell_at(hi)] - vals[cell]) / h).squaredNorm();
    } else if (has_lo) {
      acc += ((vals[cell] - vals[grid.cell_at(lo)]) / h).squaredNorm();
    }
  }
  return acc;
}

void require_inside(const Region& region) {
  if (!region.inside_unit_box()) throw Error(Errc::region_outside_domain, "region leaves the unit box");
}

double flux_exponent(const Regime& r) { return (r.q - r.p) / (r.q - 1.0); }

/// max(1, sup |F'(grad u)|^{(q-p)/(q-1)}) over simplices in the region.
double empirical_m(const DiscreteField& field, const IntegrandSpec& f, const Regime& r, const Region& region) {
  const Grid& grid = field.grid();
  double m = 1.0;
  const double e = flux_exponent(r);
  for (std::size_t s = 0; s < grid.simplex_count(); ++s) {
    if (!region.contains(grid.simplex_barycenter(s))) continue;
    m = std::max(m, std::pow(gradient(f, field.gradient(s)).norm(), e));
  }
  return m;
}

}  // namespace

CellGradients v_field_gradients(const DiscreteField& field, const IntegrandSpec& f, const Regime& r,
                                const Region& region) {
  const Grid& grid = field.grid();
  const VFields vf = v_fields(field, f, r);
  const auto vp = cell_means(grid, vf.vp);
  const auto vq = cell_means(grid, vf.vq);
  const auto mask = cell_mask(grid, region);
  CellGradients out;
  for (std::size_t c = 0; c < grid.cell_count(); ++c) {
    if (!mask[c]) continue;
    out.cells.push_back(c);
    out.grad_vp_sq.push_back(cell_grad_sq(grid, vp, mask, c));
    out.grad_vq_sq.push_back(cell_grad_sq(grid, vq, mask, c));
  }
  return out;
}

double region_average_energy(const DiscreteField& field, const IntegrandSpec& f, const Region& region) {
  const Grid& grid = field.grid();
  double acc = 0.0;
  std::size_t count = 0;
  for (std::size_t s = 0; s < grid.simplex_count(); ++s) {
    if (!region.contains(grid.simplex_barycenter(s))) continue;
    acc += eval(f, field.gradient(s));
    ++count;
  }
  if (count == 0) throw Error(Errc::region_outside_domain, "region contains no simplex barycenter");
  return acc / static_cast<double>(count);
}

DiagnosticEntry higher_diff_measure(const DiscreteField& field, const IntegrandSpec& f, const Regime& r,
                                    const ExponentChain& chain, const Region& ball) {
  require_inside(ball);
  const CellGradients cg = v_field_gradients(field, f, r, ball.scaled(0.5));
  if (cg.cells.empty()) throw Error(Errc::region_outside_domain, "half region contains no cell");
  double acc = 0.0;
  for (std::size_t i = 0; i < cg.cells.size(); ++i) acc += cg.grad_vp_sq[i] + cg.grad_vq_sq[i];
  DiagnosticEntry e;
  e.lhs = acc / static_cast<double>(cg.cells.size());
  e.rhs = std::pow(region_average_energy(field, f, ball) + 1.0, chain.b);
  return e;
}

DiagnosticEntry sup_grad_measure(const DiscreteField& field, const IntegrandSpec& f, const Region& ball,
                                 double b) {
  require_inside(ball);
  const Grid& grid = field.grid();
  const Region small = ball.scaled(0.125);
  double sup = -1.0;
  for (std::size_t s = 0; s < grid.simplex_count(); ++s) {
    if (!small.contains(grid.simplex_barycenter(s))) continue;
    sup = std::max(sup, field.gradient(s).norm());
  }
  if (sup < 0.0) throw Error(Errc::region_outside_domain, "ball/8 contains no simplex barycenter");
  DiagnosticEntry e;
  e.lhs = sup;
  e.rhs = std::pow(region_average_energy(field, f, ball) + 1.0, b);
  return e;
}

LogFit fit_log_log(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw Error(Errc::shape_mismatch, "fit needs paired samples");
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] > 0.0 && y[i] > 0.0) {
      lx.push_back(std::log(x[i]));
      ly.push_back(std::log(y[i]));
    }
  }
  if (lx.size() < 2) throw Error(Errc::domain_violation, "fit needs at least two positive pairs");
  const double n = static_cast<double>(lx.size());
  const double mx = std::accumulate(lx.begin(), lx.end(), 0.0) / n;
  const double my = std::accumulate(ly.begin(), ly.end(), 0.0) / n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  if (sxx == 0.0) throw Error(Errc::domain_violation, "fit needs distinct abscissae");
  LogFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double rss = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    const double d = ly[i] - (fit.intercept + fit.slope * lx[i]);
    rss += d * d;
  }
  fit.residual = std::sqrt(rss / n);
  return fit;
}

ReverseHolderScan reverse_holder_scan(std::span<const DiscreteField> fields, const IntegrandSpec& f,
                                      const Regime& r, std::span<const double> t_grid, const Region& ball,
                                      double b, double cap) {
  require_inside(ball);
  ReverseHolderScan out;
  out.t_grid.assign(t_grid.begin(), t_grid.end());
  out.ratios.assign(t_grid.size(), 0.0);
  for (const double t : t_grid)
    if (!(t > 1.0 && t < 2.0)) throw Error(Errc::domain_violation, "t grid must lie in (1,2)");
  for (const auto& field : fields) {
    const CellGradients cg = v_field_gradients(field, f, r, ball.scaled(0.125));
    if (cg.cells.empty()) throw Error(Errc::region_outside_domain, "ball/8 contains no cell");
    const double base = std::pow(region_average_energy(field, f, ball) + 1.0, b);
    out.empirical_M = std::max(out.empirical_M, empirical_m(field, f, r, ball));
    for (std::size_t k = 0; k < t_grid.size(); ++k) {
      const double t = t_grid[k];
      double acc = 0.0;
      for (std::size_t i = 0; i < cg.cells.size(); ++i)
        acc += std::pow(cg.grad_vp_sq[i], t) + std::pow(cg.grad_vq_sq[i], t);
      const double lhs = std::pow(acc / static_cast<double>(cg.cells.size()), 1.0 / (2.0 * t));
      out.ratios[k] = std::max(out.ratios[k], lhs / base);
    }
  }
  for (std::size_t k = 0; k < t_grid.size(); ++k)
    if (out.ratios[k] <= cap && (!out.best_t || t_grid[k] > *out.best_t)) out.best_t = t_grid[k];
  out.gehring_t = gehring_exponent(r.q / r.p, out.empirical_M, 0.5);
  return out;
}

LogDecayProfile log_decay_profile(const DiscreteField& field, const IntegrandSpec& f, const Regime& r,
                                  std::span<const double> radii, const Region& ball) {
  require_inside(ball);
  if (radii.size() < 3) throw Error(Errc::domain_violation, "log decay needs at least three radii");
  for (std::size_t i = 0; i < radii.size(); ++i) {
    if (!(radii[i] > 0.0) || radii[i] > 0.5 * ball.radius + 1e-12)
      throw Error(Errc::domain_violation, "radii must be positive and inside ball/2");
    if (i > 0 && !(radii[i] < radii[i - 1])) throw Error(Errc::domain_violation, "radii must decrease");
  }
  const Grid& grid = field.grid();
  const CellGradients cg = v_field_gradients(field, f, r, ball.scaled(0.5));
  const double cell_vol = std::pow(grid.spacing(), grid.dim());
  LogDecayProfile out;
  out.radii.assign(radii.begin(), radii.end());
  out.decay_exponent = (r.q + r.p) / (2.0 * r.q) + 2.0;
  for (const double sigma : radii) {
    const Region bs{ball.center, sigma, ball.kind};
    double mass = 0.0;
    for (std::size_t i = 0; i < cg.cells.size(); ++i)
      if (bs.contains(grid.cell_center(cg.cells[i]))) mass += (cg.grad_vp_sq[i] + cg.grad_vq_sq[i]) * cell_vol;
    out.masses.push_back(mass);
  }
  std::vector<double> lx, lm;
  for (std::size_t i = 0; i < radii.size(); ++i) {
    if (out.masses[i] <= 0.0) continue;
    lx.push_back(std::log(ball.radius / radii[i]));
    lm.push_back(out.masses[i]);
  }
  if (lx.size() >= 2) {
    double acc = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) acc += std::log(lm[i]) + out.decay_exponent * std::log(lx[i]);
    const double log_c = acc / static_cast<double>(lx.size());
    out.fitted_c = std::exp(log_c);
    double rss = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
      const double d = std::log(lm[i]) - (log_c - out.decay_exponent * std::log(lx[i]));
      rss += d * d;
    }
    out.fit_residual = std::sqrt(rss / static_cast<double>(lx.size()));
    out.free_exponent = -fit_log_log(lx, lm).slope;
  }
  return out;
}

double moser_a_alpha(double alpha, double alpha0) {
  if (!(alpha >= alpha0)) throw Error(Errc::domain_violation, "alpha must be >= alpha0");
  return alpha == alpha0 ? 1.0 : (alpha + 2.0) / (alpha + 1.0);
}

CaccioppoliResult caccioppoli_check(const DiscreteField& field, const IntegrandSpec& f, const Regime& r,
                                    double alpha, const Region& inner, const Region& outer, double alpha0) {
  if (field.components() != 1) throw Error(Errc::scalar_only, "caccioppoli check needs a scalar field");
  if (!(alpha >= -1.0)) throw Error(Errc::domain_violation, "alpha must be >= -1");
  require_inside(outer);
  if (!(inner.radius < outer.radius)) throw Error(Errc::domain_violation, "inner radius must be below outer");
  const Grid& grid = field.grid();
  const MoserWeight w{r, alpha};
  std::vector<GradMat> l(grid.simplex_count());
  for (std::size_t s = 0; s < grid.simplex_count(); ++s) {
    GradMat v(1, 1);
    v(0, 0) = moser_weight_eval(w, field.gradient(s)).l_alpha;
    l[s] = v;
  }
  const auto lc = cell_means(grid, l);
  const auto mask = cell_mask(grid, outer);
  const double width = outer.radius - inner.radius;
  const double cell_vol = std::pow(grid.spacing(), grid.dim());
  double lhs2 = 0.0, rhs2 = 0.0;
  for (std::size_t c = 0; c < grid.cell_count(); ++c) {
    if (!mask[c]) continue;
    const Point x = grid.cell_center(c);
    const Point dx = x - outer.center;
    double dist = 0.0;
    Point ddist = Point::Zero(grid.dim());
    if (outer.kind == RegionKind::ball) {
      dist = dx.norm();
      if (dist > 0.0) ddist = dx / dist;
    } else {
      Eigen::Index k = 0;
      dist = dx.cwiseAbs().maxCoeff(&k);
      ddist[k] = dx[k] >= 0.0 ? 1.0 : -1.0;
    }
    double eta = 1.0;
    double grad_eta = 0.0;
    if (dist >= outer.radius) {
      eta = 0.0;
    } else if (dist > inner.radius) {
      eta = (outer.radius - dist) / width;
      grad_eta = ddist.norm() / width;
    }
    lhs2 += eta * eta * cell_grad_sq(grid, lc, mask, c) * cell_vol;
    rhs2 += lc[c][0] * lc[c][0] * grad_eta * grad_eta * cell_vol;
  }
  CaccioppoliResult out;
  out.a_alpha = moser_a_alpha(alpha, alpha0);
  out.M = empirical_m(field, f, r, outer);
  out.lhs = std::sqrt(lhs2);
  out.rhs = out.a_alpha * std::sqrt(out.M) * std::sqrt(rhs2);
  out.ratio = out.rhs > 0.0 ? out.lhs / out.rhs : std::numeric_limits<double>::infinity();
  return out;
}

void MoserParams::validate() const {
  if (!(alpha0 >= -1.0) || !(gamma > 0.0 && gamma < 1.0) || !(c0 >= 1.0) || !(M >= 1.0) ||
      !(tau2 >= 0.125 && tau2 < tau1 && tau1 <= 1.0))
    throw Error(Errc::domain_violation,
                "moser params need alpha0 >= -1, 0 < gamma < 1, c0 >= 1, M >= 1, 1/8 <= tau2 < tau1 <= 1");
}

double moser_gamma(int n, double p, double q) {
  if (n >= 4) return (n - 3.0) / (n - 1.0);
  return p / (2.0 * q);
}

double moser_alpha_sequence(const MoserParams& params, int i) {
  if (i < 0) throw Error(Errc::domain_violation, "moser index must be >= 0");
  if (!(params.alpha0 >= -1.0) || !(params.gamma > 0.0 && params.gamma < 1.0))
    throw Error(Errc::domain_violation, "moser sequence needs alpha0 >= -1 and 0 < gamma < 1");
  return (2.0 + params.alpha0) / std::pow(params.gamma, i) - 2.0;
}

MoserBound moser_bound(const MoserParams& params, double v0) {
  params.validate();
  if (!(v0 >= 0.0)) throw Error(Errc::domain_violation, "V0 must be >= 0");
  const double g = params.gamma;
  const double a2 = 2.0 + params.alpha0;
  MoserBound out;
  out.m_exponent = g / (a2 * (1.0 - g));
  out.a0 = 4.0 * (g + 1.0) / ((1.0 - g) * (1.0 - g) * a2);
  double gj = 1.0;
  for (int j = 1; j < 1000000; ++j) {
    gj *= g;
    const double term = j * gj;
    out.series += term;
    out.series_terms = j;
    if (term < 1e-15) break;
  }
  if (v0 == 0.0) return out;
  const double log_bound = out.m_exponent * std::log(params.M) +
                           out.a0 * (std::log(params.c0 / (params.tau1 - params.tau2)) + std::log(a2 / (a2 - g))) +
                           (g + 1.0) * std::log(2.0) / (g * (1.0 - g) * a2) * out.series +
                           2.0 / a2 * std::log(v0);
  out.bound = std::exp(log_bound);
  return out;
}

CubeData cube_data_from_field(const DiscreteField& field, const IntegrandSpec& f, const Regime& r) {
  const Grid& grid = field.grid();
  const Region all{Point::Constant(grid.dim(), 0.5), 0.5 + 1e-9, RegionKind::cube};
  const CellGradients cg = v_field_gradients(field, f, r, all);
  CubeData out{grid.dim(), grid.cells_per_side(), std::vector<double>(grid.cell_count(), 0.0)};
  for (std::size_t i = 0; i < cg.cells.size(); ++i) out.values[cg.cells[i]] = cg.grad_vp_sq[i] + cg.grad_vq_sq[i];
  return out;
}

namespace {

/// Mean of v^power over the block [start, start + side)^dim of cells.
double block_mean(const CubeData& v, const std::array<int, 3>& start, int side, double power) {
  double acc = 0.0;
  long count = 0;
  const int kmax = v.dim == 3 ? side : 1;
  for (int k = 0; k < kmax; ++k)
    for (int j = 0; j < side; ++j)
      for (int i = 0; i < side; ++i) {
        const long idx = (start[0] + i) + static_cast<long>(v.cells) *
                                              ((start[1] + j) + static_cast<long>(v.cells) * (v.dim == 3 ? start[2] + k : 0));
        acc += power == 1.0 ? v.values[idx] : std::pow(v.values[idx], power);
        ++count;
      }
  return acc / static_cast<double>(count);
}

}  // namespace

namespace {

void validate_cube_data(const CubeData& v) {
  if (v.dim != 2 && v.dim != 3) throw Error(Errc::domain_violation, "cube data must be 2d or 3d");
  std::size_t expected = 1;
  for (int k = 0; k < v.dim; ++k) expected *= static_cast<std::size_t>(v.cells);
  if (v.values.size() != expected || v.cells < 4 || v.cells % 4 != 0)
    throw Error(Errc::shape_mismatch, "cube data needs cells^dim values with cells a multiple of 4");
  for (const double x : v.values)
    if (!(x >= 0.0) || !std::isfinite(x)) throw Error(Errc::domain_violation, "cube data must be nonnegative");
}

/// Visits aligned interior sub-cubes of side 4, 8, ... cells stepped by half
/// a side; fn(start, side, inner_mean, outer_m_mean).
template <class Fn>
void for_each_check_cube(const CubeData& v, double m, Fn&& fn) {
  for (int side = 4; side < v.cells; side *= 2) {
    const int step = side / 2;
    const int first = step, last = v.cells - step - side;
    std::array<int, 3> st{0, 0, 0};
    const int zmax = v.dim == 3 ? last : first;
    for (int z = first; z <= zmax; z += step)
      for (st[1] = first; st[1] <= last; st[1] += step)
        for (st[0] = first; st[0] <= last; st[0] += step) {
          st[2] = v.dim == 3 ? z : 0;
          const double outer = std::pow(block_mean(v, st, side, m), 1.0 / m);
          std::array<int, 3> in = st;
          for (int k = 0; k < v.dim; ++k) in[k] += side / 4;
          fn(st, side, block_mean(v, in, side / 2, 1.0), outer);
        }
  }
}

}  // namespace

double reverse_holder_constant(const CubeData& v, double m) {
  validate_cube_data(v);
  if (!(m > 0.0 && m < 1.0)) throw Error(Errc::domain_violation, "m must lie in (0,1)");
  double worst = 0.0;
  for_each_check_cube(v, m, [&](const std::array<int, 3>&, int, double inner, double outer) {
    if (inner > 0.0) worst = std::max(worst, outer > 0.0 ? inner / outer : std::numeric_limits<double>::infinity());
  });
  return worst;
}

GehringResult gehring_selfimprove(const CubeData& v, double M, double m, double c_hat, double s0) {
  validate_cube_data(v);
  if (!(c_hat >= 1.0) || !(s0 >= 1.0)) throw Error(Errc::domain_violation, "c_hat and s0 must be >= 1");
  GehringResult out;
  out.c_star = std::max(c_hat, s0);
  out.t = gehring_exponent(out.c_star, M, m);
  for_each_check_cube(v, m, [&](const std::array<int, 3>& st, int side, double inner, double outer) {
    ++out.cubes_checked;
    if (inner > c_hat * M * outer * (1.0 + 1e-12)) {
      std::ostringstream os;
      os << "reverse Holder hypothesis fails on the cube of side " << side << " cells at (" << st[0] << ","
         << st[1];
      if (v.dim == 3) os << "," << st[2];
      os << "): " << inner << " > " << c_hat * M * outer;
      throw Error(Errc::precondition_violation, os.str());
    }
  });
  const int q = v.cells / 4;
  const std::array<int, 3> mid{q, q, v.dim == 3 ? q : 0};
  out.lhs = std::pow(block_mean(v, mid, v.cells / 2, out.t), 1.0 / out.t);
  out.rhs = std::pow(2.0, 4 * v.dim + 4) * block_mean(v, {0, 0, 0}, v.cells, 1.0);
  out.holds = out.lhs <= out.rhs;
  return out;
}

double stress_integrability(const DiscreteField& field, const IntegrandSpec& f, const Regime& r,
                            const Region& ball) {
  require_inside(ball);
  const Grid& grid = field.grid();
  const double qc = r.q_conj();
  double stress = 0.0, energy = 0.0;
  for (std::size_t s = 0; s < grid.simplex_count(); ++s) {
    if (!ball.contains(grid.simplex_barycenter(s))) continue;
    const GradMat g = field.gradient(s);
    stress += std::pow(gradient(f, g).norm(), qc);
    energy += eval(f, g);
  }
  const double vol = grid.simplex_volume();
  return stress * vol / (energy * vol + 1.0);
}

}  // namespace lpq
