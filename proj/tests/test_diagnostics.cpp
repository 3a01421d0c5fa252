#include <doctest.h>

#include <cmath>

#include "lpq/diagnostics.hpp"
#include "lpq/growth.hpp"
#include "lpq/sampling.hpp"
#include "lpq/solver.hpp"

using namespace lpq;

namespace {

const Regime kRegime{2, 1, 2.0, 4.0, 0.0, 6.0};

const IntegrandSpec& model() {
  static const IntegrandSpec f =
      IntegrandSpec::power(0.0, 2.0) + IntegrandSpec::axis(0, 4.0) + IntegrandSpec::axis(1, 4.0);
  return f;
}

DiscreteField affine_field(std::shared_ptr<const Grid> g, double a, double b) {
  const Eigen::VectorXd v =
      interpolate(*g, 1, [&](const Point& x) { return Eigen::VectorXd::Constant(1, a * x[0] + b * x[1]); });
  return DiscreteField(std::move(g), 1, v);
}

DiscreteField solved_field(int cells, double amplitude) {
  auto g = std::make_shared<const Grid>(2, cells);
  const Eigen::VectorXd b = boundary_values(*g, 1, "sine", amplitude);
  return minimize_dirichlet(model(), g, 1, harmonic_extension(g, 1, b).nodal_values()).field;
}

}  // namespace

TEST_CASE("exponent chain") {
  const ExponentChain c = hd_exponents(Regime{4, 1, 2.0, 3.0, 0.0, 2.0}, 6.0);
  CHECK(c.lambda == doctest::Approx(0.75).epsilon(1e-15));
  CHECK(std::abs(c.beta0) < 1e-15);
  CHECK(c.kappa1 == doctest::Approx(14.0 / 3.0).epsilon(1e-15));
  CHECK(c.kappa2 == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK(c.b == doctest::Approx(5.0 / 3.0).epsilon(1e-15));

  Rng rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 200; ++i) {
    const double p = 2.0 + 3.0 * u(rng);
    const double q = p * (1.0 + u(rng));
    const double s = 2.0 * q / p + 0.01 + 20.0 * u(rng);
    const ExponentChain e = hd_exponents(Regime{5, 1, p, q, 0.0, 2.0}, s);
    CHECK(std::abs(2.0 * e.lambda + (1.0 - e.lambda) * s - 2.0 * q / p) < 1e-12);
  }
  double prev = std::numeric_limits<double>::infinity();
  for (double s : {6.5, 10.0, 100.0, 1e4, 1e8}) {
    const double b = hd_exponents(Regime{4, 1, 2.0, 3.0, 0.0, 2.0}, s).b;
    CHECK(b > 1.5);
    CHECK(b < prev);
    prev = b;
  }
  CHECK(prev == doctest::Approx(1.5).epsilon(1e-6));

  const auto errc = [](auto&& fn) -> std::optional<Errc> {
    try {
      fn();
    } catch (const Error& e) {
      return e.code();
    }
    return std::nullopt;
  };
  CHECK(errc([] { hd_exponents(Regime{4, 1, 2.0, 3.0, 0.0, 2.0}, 2.0); }) == Errc::inadmissible_sobolev_exponent);
  CHECK(errc([] { hd_exponents(Regime{4, 1, 2.0, 3.0, 0.0, 2.0}, 2.9); }) == Errc::inadmissible_sobolev_exponent);
}

TEST_CASE("affine fields have vanishing higher differentiability") {
  auto g = std::make_shared<const Grid>(2, 16);
  const DiscreteField u = affine_field(g, 0.7, -0.4);
  const Region ball = unit_box_region(2);
  const ExponentChain chain = hd_exponents(kRegime, 8.0 * 2.0);

  const DiagnosticEntry hd = higher_diff_measure(u, model(), kRegime, chain, ball);
  CHECK(hd.lhs < 1e-20);
  CHECK(hd.rhs > 1.0);

  const CellGradients cg = v_field_gradients(u, model(), kRegime, ball);
  CHECK_FALSE(cg.cells.empty());
  for (std::size_t i = 0; i < cg.cells.size(); ++i) {
    CHECK(cg.grad_vp_sq[i] < 1e-24);
    CHECK(cg.grad_vq_sq[i] < 1e-24);
  }

  const std::vector<double> radii{0.25, 0.125, 0.0625};
  const LogDecayProfile ld = log_decay_profile(u, model(), kRegime, radii, ball);
  for (double m : ld.masses) CHECK(m < 1e-20);

  const Region outer{Point::Constant(2, 0.5), 0.4};
  for (double alpha : {-1.0, 0.0, 2.0}) {
    const CaccioppoliResult cr = caccioppoli_check(u, model(), kRegime, alpha, outer.scaled(0.5), outer);
    CHECK(cr.lhs < 1e-12);
  }
}

TEST_CASE("zero field") {
  auto g = std::make_shared<const Grid>(2, 8);
  const DiscreteField u(g, 1, Eigen::VectorXd::Zero(static_cast<Eigen::Index>(g->node_count())));
  const VFields vf = v_fields(u, model(), kRegime);
  REQUIRE(vf.vp.size() == g->simplex_count());
  for (std::size_t s = 0; s < vf.vp.size(); ++s) {
    CHECK(vf.vp[s].norm() == 0.0);
    CHECK(vf.vq[s].norm() == 0.0);
  }
  CHECK(stress_integrability(u, model(), kRegime, unit_box_region(2)) == 0.0);
  CHECK(sup_grad_measure(u, model(), unit_box_region(2)).lhs == 0.0);
  CHECK_THROWS_AS(region_average_energy(u, model(), Region{Point::Constant(2, 2.0), 0.1}), Error);
}

TEST_CASE("region average energy of an affine field") {
  auto g = std::make_shared<const Grid>(2, 8);
  const DiscreteField u = affine_field(g, 1.0, 0.0);
  CHECK(region_average_energy(u, model(), unit_box_region(2)) == doctest::Approx(2.0));
}

TEST_CASE("fit_log_log") {
  std::vector<double> x{1, 2, 4, 8}, y;
  for (double v : x) y.push_back(3.0 * std::pow(v, 1.5));
  const LogFit fit = fit_log_log(x, y);
  CHECK(fit.slope == doctest::Approx(1.5).epsilon(1e-13));
  CHECK(std::exp(fit.intercept) == doctest::Approx(3.0).epsilon(1e-13));
  CHECK(fit.residual < 1e-13);
  const std::vector<double> one{1.0};
  CHECK_THROWS_AS(fit_log_log(one, one), Error);
}

TEST_CASE("solved model field diagnostics are finite") {
  const DiscreteField u = solved_field(16, 2.0);
  const Region ball = unit_box_region(2);
  const ExponentChain chain = hd_exponents(kRegime, 16.0);
  const DiagnosticEntry hd = higher_diff_measure(u, model(), kRegime, chain, ball);
  CHECK(hd.lhs > 0.0);
  CHECK(std::isfinite(hd.ratio()));
  const DiagnosticEntry sup = sup_grad_measure(u, model(), ball, chain.b);
  CHECK(sup.lhs > 0.0);
  CHECK(std::isfinite(stress_integrability(u, model(), kRegime, ball)));

  const std::vector<DiscreteField> fields{u};
  const std::vector<double> ts{1.1, 1.5, 1.9};
  const ReverseHolderScan scan = reverse_holder_scan(fields, model(), kRegime, ts, ball, chain.b, 10.0);
  CHECK(scan.ratios.size() == 3);
  CHECK(scan.gehring_t > 1.0);
  CHECK(scan.empirical_M >= 1.0);

  const CaccioppoliResult c = caccioppoli_check(u, model(), kRegime, 0.0, Region{ball.center, 0.2}, ball);
  CHECK(c.lhs > 0.0);
  CHECK(c.a_alpha == 2.0);
}

TEST_CASE("caccioppoli is scalar only") {
  auto g = std::make_shared<const Grid>(2, 4);
  const DiscreteField u(g, 2, Eigen::VectorXd::Zero(static_cast<Eigen::Index>(2 * g->node_count())));
  const Region ball = unit_box_region(2);
  try {
    caccioppoli_check(u, model(), Regime{2, 2, 2.0, 4.0, 0.0, 6.0}, 0.0, ball.scaled(0.5), ball);
    FAIL("expected scalar_only");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::scalar_only);
  }
}

TEST_CASE("moser arithmetic") {
  CHECK(moser_a_alpha(-1.0, -1.0) == 1.0);
  CHECK(moser_a_alpha(0.0, -1.0) == 2.0);
  CHECK(moser_a_alpha(2.0, -1.0) == doctest::Approx(4.0 / 3.0));

  MoserParams p;
  p.gamma = 0.5;
  CHECK(moser_alpha_sequence(p, 0) == -1.0);
  CHECK(moser_alpha_sequence(p, 1) == 0.0);
  CHECK(moser_alpha_sequence(p, 2) == 2.0);
  CHECK(moser_alpha_sequence(p, 3) == 6.0);
  for (int i = 0; i < 20; ++i)
    CHECK(moser_alpha_sequence(p, i + 1) + 2.0 ==
          doctest::Approx((moser_alpha_sequence(p, i) + 2.0) / p.gamma).epsilon(1e-14));

  CHECK(moser_bound(p, 1.0).m_exponent == doctest::Approx(1.0));
  CHECK(moser_bound(p, 0.0).bound == 0.0);
  CHECK(moser_gamma(5, 2.0, 3.0) == 0.5);
  CHECK(moser_gamma(3, 2.0, 4.0) == 0.25);

  double prev = 0.0;
  for (double m : {1.0, 2.0, 4.0, 8.0}) {
    MoserParams q = p;
    q.M = m;
    const double b = moser_bound(q, 1.0).bound;
    CHECK(b > prev);
    prev = b;
  }
  prev = 0.0;
  for (double tau2 : {0.5, 0.9, 0.99, 0.999}) {
    MoserParams q = p;
    q.tau2 = tau2;
    const double b = moser_bound(q, 1.0).bound;
    CHECK(b > prev);
    prev = b;
  }
  CHECK(prev > 1e6);

  MoserParams bad = p;
  bad.tau2 = 0.1;
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = p;
  bad.gamma = 1.0;
  CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("gehring self-improvement") {
  CubeData flat{2, 16, std::vector<double>(256, 3.0)};
  CHECK(reverse_holder_constant(flat, 0.5) == doctest::Approx(1.0).epsilon(1e-14));
  const GehringResult gr = gehring_selfimprove(flat, 1.0, 0.5, 1.0, 1.0);
  CHECK(gr.holds);
  CHECK(gr.t == doctest::Approx(1.5));
  CHECK(gr.lhs == doctest::Approx(3.0));
  CHECK(gr.cubes_checked > 0);

  CubeData spike = flat;
  spike.values[3 * 16 + 3] = 1e6;  // inside the inner block of the first cube
  const double c = reverse_holder_constant(spike, 0.5);
  CHECK(c > 1.0);
  try {
    gehring_selfimprove(spike, 1.0, 0.5, 1.0, 1.0);
    FAIL("expected a precondition violation");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::precondition_violation);
    CHECK(std::string(e.what()).find("cube") != std::string::npos);
  }
  const GehringResult ok = gehring_selfimprove(spike, 1.0, 0.5, c, 2.0);
  CHECK(ok.c_star >= 2.0);
  CHECK(ok.t == doctest::Approx(gehring_exponent(ok.c_star, 1.0, 0.5)));

  CubeData odd{2, 6, std::vector<double>(36, 1.0)};
  CHECK_THROWS_AS(gehring_selfimprove(odd, 1.0, 0.5, 1.0, 1.0), Error);
}

TEST_CASE("cube data from a solved field") {
  const DiscreteField u = solved_field(16, 1.0);
  const CubeData cd = cube_data_from_field(u, model(), kRegime);
  CHECK(cd.values.size() == 256);
  for (double v : cd.values) CHECK(v >= 0.0);
  const double c = reverse_holder_constant(cd, 0.5);
  CHECK(c >= 1.0);
  CHECK(gehring_selfimprove(cd, 1.0, 0.5, c, 1.0).t > 1.0);
}
