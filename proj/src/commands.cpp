#include "lpq/commands.hpp"

#include <cmath>
#include <fstream>
#include <map>

#include <omp.h>

#include "lpq/diagnostics.hpp"
#include "lpq/duality.hpp"
#include "lpq/growth.hpp"
#include "lpq/sampling.hpp"

namespace lpq {

int exit_code_for(Errc code) noexcept {
  switch (code) {
    case Errc::non_convergence:
      return kExitNonConvergence;
    case Errc::config_syntax:
    case Errc::config_semantic:
    case Errc::invalid_regime:
    case Errc::shape_mismatch:
    case Errc::not_even:
    case Errc::degree_too_large:
    case Errc::equal_exponents:
    case Errc::inadmissible_sobolev_exponent:
    case Errc::region_outside_domain:
    case Errc::scalar_only:
    case Errc::domain_violation:
      return kExitConfig;
    default:
      return kExitFailure;
  }
}

double default_sobolev_exp(const Regime& r) {
  if (r.n >= 4) return 2.0 * (r.n - 1.0) / (r.n - 3.0);
  return 4.0 * r.q / r.p;
}

namespace {

std::string fmt(double x) { return format_real(x); }
std::string fmt(const std::optional<double>& x) { return x ? format_real(*x) : std::string(); }
std::string fmt_bool(bool b) { return b ? "true" : "false"; }

const IntegrandSpec& require_integrand(const ExperimentConfig& cfg) {
  if (!cfg.integrand) throw Error(Errc::config_semantic, "config needs [integrand] expr");
  return *cfg.integrand;
}

void require_solvable(const Regime& r) {
  if (r.n != 2 && r.n != 3) throw Error(Errc::config_semantic, "solves need n = 2 or n = 3");
}

Region diagnostics_region(const ExperimentConfig& cfg) {
  const Region ball = cfg.diagnostics.region(cfg.regime.n);
  if (!ball.inside_unit_box()) throw Error(Errc::region_outside_domain, "diagnostics region leaves the unit box");
  return ball;
}

struct SolvedPoint {
  std::optional<DiscreteField> field;
  double epsilon = 0.0;
  std::vector<std::string> errors;
};

SolvedPoint solve_point(const IntegrandSpec& f, const Regime& r, const ExperimentConfig& cfg, int cells,
                        double amplitude, Exec exec) {
  require_solvable(r);
  auto grid = std::make_shared<const Grid>(r.n, cells);
  const Eigen::VectorXd g = boundary_values(*grid, r.N, cfg.boundary_family, amplitude, cfg.seed);
  SchemeResult res = run_scheme(f, r, grid, g, cfg.schedule, exec);
  SolvedPoint out;
  out.field = std::move(res.final_field);
  out.epsilon = cfg.schedule.epsilons.back();
  out.errors = std::move(res.errors);
  return out;
}

struct DiagRow {
  std::string id;
  double lhs = 0.0;
  double rhs = 0.0;
  std::optional<double> fitted;
  int grid = 0;
  std::optional<double> amplitude;
  double epsilon = 0.0;

  double ratio() const {
    if (lhs == 0.0) return 0.0;
    return lhs / rhs;
  }
};

CsvTable diag_table() {
  return CsvTable({"estimate_id", "lhs", "rhs", "ratio", "fitted_exponent", "grid", "amplitude", "epsilon"});
}

void add_diag_row(CsvTable& t, const DiagRow& d) {
  t.add_row({d.id, fmt(d.lhs), fmt(d.rhs), fmt(d.ratio()), fmt(d.fitted), std::to_string(d.grid), fmt(d.amplitude),
             fmt(d.epsilon)});
}

bool wants(const ExperimentConfig& cfg, const char* id) {
  const auto& e = cfg.diagnostics.estimates;
  return std::find(e.begin(), e.end(), id) != e.end();
}

std::string label(const char* id, const char* key, double v) { return std::string(id) + "_" + key + "=" + fmt(v); }

std::vector<DiagRow> field_diagnostics(const ExperimentConfig& cfg, const IntegrandSpec& f, const Regime& r,
                                       const DiscreteField& field, const Region& ball, int cells, double amplitude,
                                       double eps) {
  std::vector<DiagRow> rows;
  auto row = [&](std::string id, double lhs, double rhs) {
    rows.push_back(DiagRow{std::move(id), lhs, rhs, std::nullopt, cells, amplitude, eps});
  };
  if (wants(cfg, "hdes")) {
    const ExponentChain chain = hd_exponents(r, cfg.diagnostics.sobolev_exp.value_or(default_sobolev_exp(r)));
    const DiagnosticEntry e = higher_diff_measure(field, f, r, chain, ball);
    row("hdes", e.lhs, e.rhs);
  }
  if (wants(cfg, "sup")) {
    const DiagnosticEntry e = sup_grad_measure(field, f, ball);
    row("sup", e.lhs, e.rhs);
  }
  if (wants(cfg, "stress")) row("stress", stress_integrability(field, f, r, ball), 1.0);
  if (wants(cfg, "cacc") && field.components() == 1) {
    for (const double alpha : cfg.diagnostics.alphas) {
      const CaccioppoliResult c = caccioppoli_check(field, f, r, alpha, ball.scaled(0.5), ball);
      row(label("cacc", "alpha", alpha), c.lhs, c.rhs);
    }
  }
  if (wants(cfg, "logdecay")) {
    const LogDecayProfile prof = log_decay_profile(field, f, r, cfg.diagnostics.radii, ball);
    for (std::size_t i = 0; i < prof.radii.size(); ++i) {
      const double model = prof.fitted_c * std::pow(std::log(ball.radius / prof.radii[i]), -prof.decay_exponent);
      row(label("logdecay", "sigma", prof.radii[i]), prof.masses[i], model);
      rows.back().fitted = prof.free_exponent;
    }
  }
  if (wants(cfg, "gehring") && cells % 4 == 0) {
    const CubeData v = cube_data_from_field(field, f, r);
    const double m = 0.5;
    const double c_hat = std::max(1.0, reverse_holder_constant(v, m));
    const GehringResult g = gehring_selfimprove(v, 1.0, m, c_hat, r.q / r.p);
    row("gehring", g.lhs, g.rhs);
    rows.back().fitted = g.t;
  }
  return rows;
}

/// Fits log lhs against log(avg_B F + 1) across amplitudes for one estimate.
std::optional<double> fit_against_energy(const std::vector<double>& energy_plus_one, const std::vector<double>& lhs) {
  std::size_t positive = 0;
  for (const double v : lhs)
    if (v > 0.0) ++positive;
  if (positive < 2) return std::nullopt;
  try {
    return fit_log_log(energy_plus_one, lhs).slope;
  } catch (const Error&) {
    return std::nullopt;
  }
}

bool failed_row(const DiagRow& d, double max_ratio) {
  const double r = d.ratio();
  return !std::isfinite(r) || r > max_ratio || (d.id == "gehring" && d.lhs > d.rhs);
}

}  // namespace

CommandResult run_check(const ExperimentConfig& cfg) {
  const IntegrandSpec& f = require_integrand(cfg);
  CheckOptions opts;
  opts.samples = cfg.check.samples;
  opts.r_min = cfg.check.r_min;
  opts.radius = cfg.check.radius;
  opts.seed = cfg.seed;
  const LegendreCertificate cert = check_legendre(f, cfg.regime, opts);
  CommandResult out{CsvTable({"quantity", "value"}), cert.passed ? kExitOk : kExitFailure};
  auto& t = out.table;
  t.add_row({"integrand", f.describe()});
  t.add_row({"seed", std::to_string(cfg.seed)});
  t.add_row({"samples", std::to_string(cert.samples)});
  t.add_row({"L", fmt(cfg.regime.L)});
  t.add_row({"constant_assf3", fmt(cert.constant_assf3)});
  t.add_row({"constant_assf1", fmt(cert.constant_assf1)});
  t.add_row({"constant_elr", fmt(cert.constant_elr)});
  t.add_row({"constant_fprime", fmt(cert.constant_fprime)});
  t.add_row({"lower_bound_ok", fmt_bool(cert.lower_bound_ok)});
  t.add_row({"growth_ok", fmt_bool(cert.growth_ok)});
  if (const auto* poly = std::get_if<EvenPolynomial>(&f.node())) {
    const PolynomialGrowth g = polynomial_growth_exponents(*poly->poly, 2000, 1e2, cfg.seed);
    t.add_row({"poly_p_max", fmt(g.p_max)});
    t.add_row({"poly_q", fmt(g.q)});
    t.add_row({"poly_c", fmt(g.c)});
  }
  t.add_row({"passed", fmt_bool(cert.passed)});
  t.add_row({"failure", cert.failure});
  return out;
}

CommandResult run_conjugate(const ExperimentConfig& cfg) {
  const IntegrandSpec& f = require_integrand(cfg);
  const int rows = cfg.regime.N, cols = cfg.regime.n;
  std::vector<GradMat> xis;
  for (const auto& pt : cfg.conjugate.points)
    xis.push_back(unflatten(Eigen::Map<const Eigen::VectorXd>(pt.data(), static_cast<Eigen::Index>(pt.size())), rows, cols));
  Rng rng(cfg.seed);
  for (int i = 0; i < cfg.conjugate.count; ++i) xis.push_back(random_in_ball(rng, rows, cols, cfg.conjugate.radius));

  std::vector<std::string> header;
  const int dim = rows * cols;
  for (int k = 0; k < dim; ++k) header.push_back("xi" + std::to_string(k));
  header.push_back("fstar");
  for (int k = 0; k < dim; ++k) header.push_back("argmax" + std::to_string(k));
  header.push_back("newton_iters");
  header.push_back("residual");
  CommandResult out{CsvTable(std::move(header)), kExitOk};
  std::vector<ConjugateResult> res(xis.size());
  for_each_index(Exec::parallel, xis.size(), [&](std::size_t i) { res[i] = conjugate(f, xis[i]); });
  for (std::size_t i = 0; i < xis.size(); ++i) {
    std::vector<std::string> row;
    const Eigen::VectorXd x = flatten(xis[i]);
    const Eigen::VectorXd z = flatten(res[i].argmax);
    for (int k = 0; k < dim; ++k) row.push_back(fmt(x[k]));
    row.push_back(fmt(res[i].value));
    for (int k = 0; k < dim; ++k) row.push_back(fmt(z[k]));
    row.push_back(std::to_string(res[i].newton_iters));
    row.push_back(fmt(res[i].residual));
    out.table.add_row(std::move(row));
  }
  return out;
}

CommandResult run_solve(const ExperimentConfig& cfg, const std::optional<std::filesystem::path>& out_dir) {
  const IntegrandSpec& f = require_integrand(cfg);
  const Regime& r = cfg.regime;
  require_solvable(r);
  CommandResult out{CsvTable({"grid", "amplitude", "epsilon", "mollifier_width", "surrogate_norm", "gamma",
                              "energy_eps", "energy_base", "gamma_term", "w1p_increment", "enes_lhs",
                              "stress_ratio", "iterations", "residual_sup"}),
                    kExitOk};
  for (const int cells : cfg.grid_cells) {
    for (std::size_t a = 0; a < cfg.amplitudes.size(); ++a) {
      const double amp = cfg.amplitudes[a];
      auto grid = std::make_shared<const Grid>(r.n, cells);
      const Eigen::VectorXd g = boundary_values(*grid, r.N, cfg.boundary_family, amp, cfg.seed);
      const SchemeResult res = run_scheme(f, r, grid, g, cfg.schedule);
      for (const auto& s : res.steps)
        out.table.add_row({std::to_string(cells), fmt(amp), fmt(s.epsilon), fmt(s.mollifier_width),
                           fmt(s.surrogate_norm), fmt(s.gamma), fmt(s.energy_eps), fmt(s.energy_base),
                           fmt(s.gamma_term), fmt(s.w1p_increment), fmt(s.enes_lhs), fmt(s.stress_ratio),
                           std::to_string(s.report.iterations), fmt(s.report.residual_sup)});
      if (!res.errors.empty()) {
        out.exit_code = kExitNonConvergence;
      } else if ((!res.enes_ok || !res.gamma_term_decreasing) && out.exit_code == kExitOk) {
        out.exit_code = kExitFailure;
      }
      if (out_dir && res.final_field) {
        std::filesystem::create_directories(*out_dir);
        const std::string stem = "field_g" + std::to_string(cells) + "_a" + std::to_string(a);
        std::ofstream nodes(*out_dir / (stem + "_nodes.csv"));
        field_nodes_table(*res.final_field).write(nodes);
        std::ofstream grads(*out_dir / (stem + "_gradients.csv"));
        field_gradients_table(*res.final_field).write(grads);
      }
    }
  }
  return out;
}

CommandResult run_diagnose(const ExperimentConfig& cfg) {
  const IntegrandSpec& f = require_integrand(cfg);
  const Regime& r = cfg.regime;
  require_solvable(r);
  const Region ball = diagnostics_region(cfg);
  CommandResult out{diag_table(), kExitOk};
  for (const int cells : cfg.grid_cells) {
    std::vector<DiscreteField> fields;
    std::vector<DiagRow> rows;
    std::vector<double> energy_plus_one;
    std::vector<double> used_amplitudes;
    double eps = cfg.schedule.epsilons.back();
    for (const double amp : cfg.amplitudes) {
      SolvedPoint sp = solve_point(f, r, cfg, cells, amp, Exec::parallel);
      if (!sp.field) {
        out.exit_code = kExitNonConvergence;
        continue;
      }
      auto fr = field_diagnostics(cfg, f, r, *sp.field, ball, cells, amp, sp.epsilon);
      rows.insert(rows.end(), fr.begin(), fr.end());
      energy_plus_one.push_back(region_average_energy(*sp.field, f, ball) + 1.0);
      used_amplitudes.push_back(amp);
      fields.push_back(std::move(*sp.field));
    }
    for (const char* id : {"hdes", "sup"}) {
      std::vector<double> lhs;
      for (const auto& d : rows)
        if (d.id == id) lhs.push_back(d.lhs);
      if (lhs.size() != energy_plus_one.size()) continue;
      const auto slope = fit_against_energy(energy_plus_one, lhs);
      for (auto& d : rows)
        if (d.id == id) d.fitted = slope;
    }
    if (wants(cfg, "revh") && !fields.empty()) {
      const double b = hd_exponents(r, cfg.diagnostics.sobolev_exp.value_or(default_sobolev_exp(r))).b;
      const ReverseHolderScan scan =
          reverse_holder_scan(fields, f, r, cfg.diagnostics.t_grid, ball, b, cfg.diagnostics.cap);
      for (std::size_t k = 0; k < scan.t_grid.size(); ++k)
        rows.push_back(DiagRow{label("revh", "t", scan.t_grid[k]), scan.ratios[k], cfg.diagnostics.cap, std::nullopt,
                               cells, std::nullopt, eps});
      rows.push_back(DiagRow{"revh_best_t", scan.best_t.value_or(0.0), scan.gehring_t, scan.best_t, cells,
                             std::nullopt, eps});
    }
    for (const auto& d : rows) {
      add_diag_row(out.table, d);
      if (failed_row(d, cfg.diagnostics.max_ratio) && d.id.rfind("revh", 0) != 0 && out.exit_code == kExitOk)
        out.exit_code = kExitFailure;
    }
  }
  return out;
}

CommandResult run_sweep(const ExperimentConfig& cfg) {
  if (cfg.sweep.values.empty()) throw Error(Errc::config_semantic, "[sweep] needs values");
  const bool over_q = cfg.sweep.parameter == "q";
  const bool templated = cfg.integrand_expr.find("$q") != std::string::npos;
  const Region ball = cfg.regime.n <= 3 ? diagnostics_region(cfg) : Region{};

  struct SweepRow {
    Regime regime;
    Admissibility adm;
    ClassicalGates gates;
    std::string status = "skipped";
    std::optional<DiagRow> hdes, sup, stress;
  };
  std::vector<SweepRow> rows(cfg.sweep.values.size());
  const int saved_threads = omp_get_max_threads();
  if (cfg.sweep.workers > 0) omp_set_num_threads(cfg.sweep.workers);
  for_each_index(Exec::parallel, rows.size(), [&](std::size_t i) {
    SweepRow& row = rows[i];
    const double v = cfg.sweep.values[i];
    row.regime = cfg.regime;
    double amp = cfg.amplitudes.front();
    if (over_q) row.regime.q = v;
    else amp = v;
    try {
      check_regime(row.regime);
      row.adm = validate_regime(row.regime);
      row.gates = classical_gates(row.regime);
    } catch (const Error& e) {
      row.status = errc_name(e.code());
      return;
    }
    const bool can_solve = row.regime.n <= 3 && cfg.integrand && (!over_q || templated);
    if (!can_solve) return;
    try {
      const IntegrandSpec f = over_q ? cfg.integrand_for_q(v) : *cfg.integrand;
      const int cells = cfg.grid_cells.front();
      SolvedPoint sp = solve_point(f, row.regime, cfg, cells, amp, Exec::serial);
      if (!sp.field) {
        row.status = "non_convergence";
        return;
      }
      const Regime& r = row.regime;
      const ExponentChain chain = hd_exponents(r, cfg.diagnostics.sobolev_exp.value_or(default_sobolev_exp(r)));
      const DiagnosticEntry h = higher_diff_measure(*sp.field, f, r, chain, ball);
      const DiagnosticEntry s = sup_grad_measure(*sp.field, f, ball);
      row.hdes = DiagRow{"hdes", h.lhs, h.rhs, std::nullopt, cells, amp, sp.epsilon};
      row.sup = DiagRow{"sup", s.lhs, s.rhs, std::nullopt, cells, amp, sp.epsilon};
      row.stress = DiagRow{"stress", stress_integrability(*sp.field, f, r, ball), 1.0, std::nullopt, cells, amp,
                           sp.epsilon};
      row.status = "ok";
    } catch (const Error& e) {
      row.status = errc_name(e.code());
    }
  });
  omp_set_num_threads(saved_threads);

  CommandResult out{CsvTable({"point", "parameter", "value", "q", "admissible", "threshold", "rule", "pq22", "pq23",
                              "bsbound", "cor1", "holder", "holder_exponent", "status", "hdes_lhs", "hdes_rhs",
                              "hdes_ratio", "sup_lhs", "sup_rhs", "sup_ratio", "stress_ratio"}),
                    kExitOk};
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const SweepRow& s = rows[i];
    auto gate = [&](const char* key) {
      const auto it = s.gates.gates.find(key);
      return it == s.gates.gates.end() ? std::string() : fmt_bool(it->second);
    };
    auto lhs = [](const std::optional<DiagRow>& d) { return d ? fmt(d->lhs) : std::string(); };
    auto rhs = [](const std::optional<DiagRow>& d) { return d ? fmt(d->rhs) : std::string(); };
    auto ratio = [](const std::optional<DiagRow>& d) { return d ? fmt(d->ratio()) : std::string(); };
    out.table.add_row({std::to_string(i), cfg.sweep.parameter, fmt(cfg.sweep.values[i]), fmt(s.regime.q),
                       fmt_bool(s.adm.admissible), fmt(s.adm.threshold), gate_rule_name(s.adm.rule), gate("pq22"),
                       gate("pq23"), gate("bsbound"), gate("cor1"), gate("holder"), fmt(s.gates.holder_exponent),
                       s.status, lhs(s.hdes), rhs(s.hdes), ratio(s.hdes), lhs(s.sup), rhs(s.sup), ratio(s.sup),
                       ratio(s.stress)});
    if (s.status == "non_convergence") out.exit_code = kExitNonConvergence;
    else if (s.status != "ok" && s.status != "skipped" && out.exit_code == kExitOk) out.exit_code = kExitFailure;
  }
  return out;
}

CommandResult run_gehring(std::span<const double> c0, std::span<const double> M, std::span<const double> m) {
  CommandResult out{CsvTable({"c0", "M", "m", "t"}), kExitOk};
  for (const double a : c0)
    for (const double b : M)
      for (const double c : m) out.table.add_row({fmt(a), fmt(b), fmt(c), fmt(gehring_exponent(a, b, c))});
  return out;
}

CommandResult run_moser(const MoserCommand& cmd) {
  cmd.params.validate();
  if (cmd.terms) {
    CommandResult out{CsvTable({"i", "alpha_i"}), kExitOk};
    for (int i = 0; i <= *cmd.terms; ++i)
      out.table.add_row({std::to_string(i), fmt(moser_alpha_sequence(cmd.params, i))});
    return out;
  }
  const double v0 = cmd.v0.value_or(1.0);
  const MoserBound b = moser_bound(cmd.params, v0);
  const auto& p = cmd.params;
  CommandResult out{CsvTable({"alpha0", "gamma", "c0", "M", "tau1", "tau2", "v0", "m_exponent", "a0", "series",
                              "series_terms", "bound"}),
                    kExitOk};
  out.table.add_row({fmt(p.alpha0), fmt(p.gamma), fmt(p.c0), fmt(p.M), fmt(p.tau1), fmt(p.tau2), fmt(v0),
                     fmt(b.m_exponent), fmt(b.a0), fmt(b.series), std::to_string(b.series_terms), fmt(b.bound)});
  return out;
}

}  // namespace lpq
