#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Sparse>

#include "lpq/integrands.hpp"
#include "lpq/parallel.hpp"

namespace lpq {

struct Schedule {
  std::vector<double> epsilons;
  std::vector<double> mollifier_width;  // one per epsilon
  double tol_energy = 1e-12;
  double tol_residual = 1e-9;
  int max_newton_iters = 100;

  /// eps_k = 2^{-k}, k = 1..count, width = eps.
  static Schedule dyadic(int count);
  static Schedule from_epsilons(std::vector<double> eps);
  void validate() const;
};

/// F(z) + gamma * ell_1(z)^q.
class RegularizedIntegrand {
 public:
  RegularizedIntegrand(IntegrandSpec base, double gamma_eps, double q);
  const IntegrandSpec& base() const { return base_; }
  double gamma_eps() const { return gamma_; }
  double q() const { return q_; }
  const IntegrandSpec& spec() const { return spec_; }

 private:
  IntegrandSpec base_;
  double gamma_;
  double q_;
  IntegrandSpec spec_;
};

/// (1 + 1/eps + norm^{2q}/eps)^{-1}
double gamma_eps(double eps, double grad_q_norm, double q);

/// Normalized bump-kernel average over boundary nodes within distance eps.
/// Interior entries are copied through; returns g when eps < one cell.
Eigen::VectorXd mollify_boundary(const Grid& grid, int components, const Eigen::VectorXd& g, double eps,
                                 Exec exec = Exec::parallel);

/// Named boundary data sampled at every node: zero, affine, sine, random.
Eigen::VectorXd boundary_values(const Grid& grid, int components, const std::string& family,
                                double amplitude, std::uint64_t seed = 1);

struct SolveOptions {
  double tol_energy = 1e-12;
  double tol_residual = 1e-9;
  int max_iters = 100;
  Exec exec = Exec::parallel;
};

struct Assembly {
  double energy = 0.0;
  Eigen::VectorXd grad;               // all dofs
  Eigen::SparseMatrix<double> hess;   // free (interior) dofs only
};

/// Exact P1 energy sum_T vol(T) F(grad u|_T) with derivatives.
/// order 0: energy; 1: + gradient; 2: + hessian on interior dofs.
Assembly assemble(const IntegrandSpec& f, const Grid& grid, int components, const Eigen::VectorXd& values,
                  int order, Exec exec);

struct SolveHistory {
  std::vector<double> energies;  // energy before each accepted step, then final
};

class NonConvergence : public Error {
 public:
  NonConvergence(const std::string& what, SolveReport report, Eigen::VectorXd state)
      : Error(Errc::non_convergence, what), report_(report), state_(std::move(state)) {}
  const SolveReport& report() const { return report_; }
  const Eigen::VectorXd& state() const { return state_; }

 private:
  SolveReport report_;
  Eigen::VectorXd state_;
};

struct DirichletSolution {
  DiscreteField field;
  SolveReport report;
  SolveHistory history;
};

/// Damped Newton on the interior values; boundary entries of `initial` are
/// the Dirichlet data. Throws NonConvergence carrying the partial state.
DirichletSolution minimize_dirichlet(const IntegrandSpec& f, std::shared_ptr<const Grid> grid, int components,
                                     const Eigen::VectorXd& initial, const SolveOptions& opts = {});
DirichletSolution minimize_dirichlet(const RegularizedIntegrand& feps, double epsilon,
                                     std::shared_ptr<const Grid> grid, int components,
                                     const Eigen::VectorXd& initial, const SolveOptions& opts = {});

/// Discrete harmonic extension of the boundary entries of g.
DiscreteField harmonic_extension(std::shared_ptr<const Grid> grid, int components, const Eigen::VectorXd& g,
                                 Exec exec = Exec::parallel);

/// Sup over interior dofs of the weak residual.
double el_residual(const IntegrandSpec& f, const DiscreteField& field, Exec exec = Exec::parallel);

/// (sum_T vol |grad u_T|^s)^{1/s}
double grad_norm(const DiscreteField& field, double s);
/// sum_T vol F(grad u_T), optionally restricted to simplices with barycenter in region.
double field_energy(const IntegrandSpec& f, const DiscreteField& field, const Region* region = nullptr);

struct SchemeStep {
  double epsilon = 0.0;
  double mollifier_width = 0.0;
  double surrogate_norm = 0.0;  // ||grad u~_eps||_q from the mollified data
  double gamma = 0.0;
  double energy_eps = 0.0;   // F_eps(u_eps; B)
  double energy_base = 0.0;  // F(u_eps; B)
  double gamma_term = 0.0;   // gamma ||grad u_eps||_q^q
  std::optional<double> w1p_increment;  // ||grad(u_eps - u_prev)||_p
  double enes_lhs = 0.0;     // ||grad u||_p^p / L + gamma_term
  double stress_ratio = 0.0; // ||F'(grad u)||_{q'}^{q'} / (F(u) + 1)
  SolveReport report;
};

struct SchemeResult {
  std::vector<SchemeStep> steps;
  std::optional<DiscreteField> final_field;
  bool gamma_term_decreasing = true;
  bool increments_decreasing = true;  // from the second increment on
  bool enes_ok = true;                // enes_lhs <= energy_eps at every step
  std::vector<std::string> errors;    // per-epsilon solver failures
};

SchemeResult run_scheme(const IntegrandSpec& f, const Regime& r, std::shared_ptr<const Grid> grid,
                        const Eigen::VectorXd& boundary, const Schedule& schedule, Exec exec = Exec::parallel);

}  // namespace lpq
