#include <doctest.h>

#include <cmath>
#include <sstream>

#include "lpq/csv.hpp"
#include "lpq/sampling.hpp"
#include "lpq/solver.hpp"
#include "oracles.hpp"

using namespace lpq;

namespace {

const IntegrandSpec& model() {
  static const IntegrandSpec f =
      IntegrandSpec::power(0.0, 2.0) + IntegrandSpec::axis(0, 4.0) + IntegrandSpec::axis(1, 4.0);
  return f;
}

Eigen::VectorXd random_interior(const Grid& g, int comps, const Eigen::VectorXd& boundary, std::uint64_t seed) {
  Rng rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Eigen::VectorXd x = boundary;
  for (const auto a : g.interior_nodes())
    for (int c = 0; c < comps; ++c) x[static_cast<Eigen::Index>(a * comps + c)] = u(rng);
  return x;
}

}  // namespace

TEST_CASE("gamma_eps") {
  CHECK(gamma_eps(1.0, 0.0, 4.0) == 0.5);
  double prev = 1.0;
  for (double eps = 1.0; eps > 1e-6; eps /= 2) {
    const double g = gamma_eps(eps, 3.0, 4.0);
    CHECK(g < prev);
    prev = g;
  }
  for (double norm : {1.0, 10.0, 100.0}) {
    const double eps = 0.1;
    CHECK(gamma_eps(eps, norm, 4.0) * std::pow(norm, 4.0) <= eps * std::pow(norm, -4.0) * (1 + 1e-12));
  }
}

TEST_CASE("regularized integrand") {
  const RegularizedIntegrand f(model(), 0.25, 4.0);
  const GradMat z = GradMat::Constant(1, 2, 0.7);
  CHECK(eval(f.spec(), z) == doctest::Approx(eval(model(), z) + 0.25 * std::pow(1.0 + z.squaredNorm(), 2.0)));
  CHECK_THROWS_AS(RegularizedIntegrand(model(), 1.0, 4.0), Error);
  CHECK_THROWS_AS(RegularizedIntegrand(model(), 0.5, 1.0), Error);
}

TEST_CASE("mollify_boundary") {
  const Grid g(2, 32);
  const Eigen::VectorXd one = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(g.node_count()), 3.0);
  CHECK((mollify_boundary(g, 1, one, 0.2) - one).cwiseAbs().maxCoeff() < 1e-13);

  const Eigen::VectorXd lin = interpolate(g, 1, [](const Point& x) { return Eigen::VectorXd::Constant(1, x[0]); });
  const Eigen::VectorXd ml = mollify_boundary(g, 1, lin, 0.1);
  for (const auto a : g.boundary_nodes()) {
    const Point x = g.node_point(a);
    const bool edge_interior = (x[1] == 0.0 || x[1] == 1.0) && x[0] > 0.15 && x[0] < 0.85;
    if (edge_interior) CHECK(std::abs(ml[static_cast<Eigen::Index>(a)] - lin[static_cast<Eigen::Index>(a)]) < 1e-12);
  }

  const Eigen::VectorXd hf =
      interpolate(g, 1, [](const Point& x) { return Eigen::VectorXd::Constant(1, std::sin(16 * M_PI * x[0])); });
  auto boundary_max = [&](const Eigen::VectorXd& v) {
    double m = 0.0;
    for (const auto a : g.boundary_nodes()) m = std::max(m, std::abs(v[static_cast<Eigen::Index>(a)]));
    return m;
  };
  double prev = 0.0;
  for (double eps : {0.2, 0.1, 0.05}) {
    const double m = boundary_max(mollify_boundary(g, 1, hf, eps));
    CHECK(m < boundary_max(hf));
    CHECK(m > prev);
    prev = m;
  }
  CHECK(mollify_boundary(g, 1, hf, 0.5 / 32) == hf);
}

TEST_CASE("affine data is reproduced exactly") {
  for (int dim : {2, 3}) {
    auto g = std::make_shared<const Grid>(dim, dim == 2 ? 16 : 6);
    const Eigen::VectorXd b = boundary_values(*g, 1, "affine", 1.0);
    for (const IntegrandSpec& f : {IntegrandSpec::power(0.0, 2.0), model()}) {
      const auto sol = minimize_dirichlet(f, g, 1, b);
      CHECK((sol.field.nodal_values() - b).cwiseAbs().maxCoeff() <= 1e-12);
    }
  }
  auto g = std::make_shared<const Grid>(2, 8);
  const Eigen::VectorXd x1 = interpolate(*g, 1, [](const Point& x) { return Eigen::VectorXd::Constant(1, x[0]); });
  const auto sol = minimize_dirichlet(IntegrandSpec::power(0.0, 2.0), g, 1, harmonic_extension(g, 1, x1).nodal_values());
  for (std::size_t s = 0; s < g->simplex_count(); ++s) {
    CHECK(std::abs(sol.field.gradient(s)(0, 0) - 1.0) < 1e-12);
    CHECK(std::abs(sol.field.gradient(s)(0, 1)) < 1e-12);
  }
}

TEST_CASE("quadratic solve matches the 5-point oracle") {
  const int cells = 32;
  auto g = std::make_shared<const Grid>(2, cells);
  const Eigen::VectorXd b = boundary_values(*g, 1, "random", 1.0, 7);
  const auto sol = minimize_dirichlet(IntegrandSpec::power(0.0, 2.0), g, 1, b);
  const Eigen::VectorXd ref = oracle::five_point_harmonic(cells, [&](double x, double y) {
    return b[static_cast<Eigen::Index>(g->node_at({static_cast<int>(std::lround(x * cells)),
                                                     static_cast<int>(std::lround(y * cells)), 0}))];
  });
  CHECK((sol.field.nodal_values() - ref).cwiseAbs().maxCoeff() <= 1e-8);
}

TEST_CASE("model solve") {
  auto g = std::make_shared<const Grid>(2, 16);
  const Eigen::VectorXd b = boundary_values(*g, 1, "sine", 1.0);
  const RegularizedIntegrand feps(model(), 0.01, 4.0);
  const DiscreteField harm = harmonic_extension(g, 1, b);
  const auto sol = minimize_dirichlet(feps, 0.1, g, 1, harm.nodal_values());
  CHECK(sol.report.residual_sup <= 1e-9);
  CHECK(el_residual(feps.spec(), sol.field) <= 1e-9);
  CHECK(sol.report.energy < field_energy(feps.spec(), harm));
  CHECK(sol.report.epsilon == 0.1);
  CHECK(sol.report.gamma_eps == 0.01);
  // Energy strictly decreases along the Newton iterates.
  for (std::size_t i = 1; i < sol.history.energies.size(); ++i)
    CHECK(sol.history.energies[i] <= sol.history.energies[i - 1]);

  SUBCASE("perturbing the minimizer raises the residual") {
    Eigen::VectorXd x = sol.field.nodal_values();
    x[static_cast<Eigen::Index>(g->interior_nodes()[5])] += 1e-3;
    CHECK(el_residual(feps.spec(), DiscreteField(g, 1, x)) > el_residual(feps.spec(), sol.field));
  }
  SUBCASE("two random starts agree") {
    const auto s1 = minimize_dirichlet(feps.spec(), g, 1, random_interior(*g, 1, b, 1));
    const auto s2 = minimize_dirichlet(feps.spec(), g, 1, random_interior(*g, 1, b, 2));
    CHECK((s1.field.nodal_values() - s2.field.nodal_values()).cwiseAbs().maxCoeff() <= 1e-7);
  }
}

TEST_CASE("constant gradients have zero residual") {
  auto g = std::make_shared<const Grid>(2, 8);
  const Eigen::VectorXd v =
      interpolate(*g, 1, [](const Point& x) { return Eigen::VectorXd::Constant(1, 0.3 * x[0] - 1.7 * x[1]); });
  CHECK(el_residual(model(), DiscreteField(g, 1, v)) < 1e-12);
}

TEST_CASE("assembled energy is exact for piecewise-linear fields") {
  auto g = std::make_shared<const Grid>(3, 4);
  GradMat a(2, 3);
  a << 0.5, -1.0, 2.0, 0.25, 0.0, 1.5;
  const Eigen::VectorXd v = interpolate(*g, 2, [&](const Point& x) -> Eigen::VectorXd { return a * x; });
  const auto asm0 = assemble(IntegrandSpec::power(1.0, 2.0), *g, 2, v, 0, Exec::serial);
  CHECK(std::abs(asm0.energy - (1.0 + a.squaredNorm())) < 1e-13);
}

TEST_CASE("assembly is identical serial and parallel") {
  omp_set_num_threads(4);
  for (int dim : {2, 3}) {
    const Grid g(dim, dim == 2 ? 24 : 6);
    const Eigen::VectorXd u = boundary_values(g, 2, "random", 2.0, 3);
    const auto s = assemble(model() + IntegrandSpec::axis(dim - 1, 3.0), g, 2, u, 2, Exec::serial);
    const auto p = assemble(model() + IntegrandSpec::axis(dim - 1, 3.0), g, 2, u, 2, Exec::parallel);
    CHECK(s.energy == p.energy);
    CHECK(s.grad == p.grad);
    CHECK(Eigen::MatrixXd(s.hess) == Eigen::MatrixXd(p.hess));
  }
}

TEST_CASE("non-convergence carries the partial state") {
  auto g = std::make_shared<const Grid>(2, 8);
  const Eigen::VectorXd b = boundary_values(*g, 1, "sine", 3.0);
  SolveOptions opts;
  opts.max_iters = 1;
  try {
    minimize_dirichlet(model(), g, 1, b, opts);
    FAIL("expected non-convergence");
  } catch (const NonConvergence& e) {
    CHECK(e.code() == Errc::non_convergence);
    CHECK(e.report().iterations == 1);
    CHECK(e.state().size() == b.size());
  }
}

TEST_CASE("scheme on the quadratic integrand follows the harmonic oracle") {
  auto g = std::make_shared<const Grid>(2, 16);
  const Eigen::VectorXd b = boundary_values(*g, 1, "sine", 1.0);
  const Regime r{2, 1, 2.0, 2.0, 0.0, 2.0};
  const Schedule sch = Schedule::dyadic(4);
  const auto res = run_scheme(IntegrandSpec::power(0.0, 2.0), r, g, b, sch);
  REQUIRE(res.errors.empty());
  REQUIRE(res.final_field);
  const Eigen::VectorXd mb = mollify_boundary(*g, 1, b, sch.mollifier_width.back());
  const DiscreteField harm = harmonic_extension(g, 1, mb);
  CHECK((res.final_field->nodal_values() - harm.nodal_values()).cwiseAbs().maxCoeff() <= 1e-8);
}

TEST_CASE("scheme monitors on the model") {
  auto g = std::make_shared<const Grid>(2, 32);
  const Eigen::VectorXd b = boundary_values(*g, 1, "sine", 4.0);
  const Regime r{2, 1, 2.0, 4.0, 0.0, 6.0};
  const auto res = run_scheme(model(), r, g, b, Schedule::dyadic(6));
  REQUIRE(res.errors.empty());
  CHECK(res.gamma_term_decreasing);
  CHECK(res.increments_decreasing);
  CHECK(res.enes_ok);
  REQUIRE(res.steps.size() == 6);
  for (const auto& s : res.steps) {
    CHECK(std::isfinite(s.stress_ratio));
    CHECK(s.report.residual_sup <= 1e-9);
  }
  CHECK_FALSE(res.steps.front().w1p_increment);
}

TEST_CASE("schedules") {
  const Schedule d = Schedule::dyadic(3);
  CHECK(d.epsilons == std::vector<double>{0.5, 0.25, 0.125});
  CHECK(d.mollifier_width == d.epsilons);
  CHECK_THROWS_AS(Schedule::from_epsilons({0.5, 0.5}), Error);
  CHECK_THROWS_AS(Schedule::from_epsilons({1.5}), Error);
}

TEST_CASE("field exports") {
  auto g = std::make_shared<const Grid>(2, 2);
  const Eigen::VectorXd v = interpolate(*g, 1, [](const Point& x) { return Eigen::VectorXd::Constant(1, x[0] / 3.0); });
  const DiscreteField f(g, 1, v);
  std::ostringstream nodes, grads;
  field_nodes_table(f).write(nodes);
  field_gradients_table(f).write(grads);
  CHECK(nodes.str().rfind("x0,x1,u0\n0,0,0\n0.5,0,0.16666666666666666\n", 0) == 0);
  CHECK(grads.str().rfind("simplex,b0,b1,g_0_0,g_0_1\n", 0) == 0);
  CHECK(field_gradients_table(f).rows().size() == g->simplex_count());
}
