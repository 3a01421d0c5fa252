#include <doctest.h>

#include <cmath>

#include "lpq/growth.hpp"
#include "lpq/sampling.hpp"

using namespace lpq;

namespace {

GradMat row(double a, double b) {
  GradMat z(1, 2);
  z << a, b;
  return z;
}

const IntegrandSpec& quartic_axis_model() {
  static const IntegrandSpec f = IntegrandSpec::power(0.0, 2.0) + IntegrandSpec::axis(0, 4.0);
  return f;
}

}  // namespace

TEST_CASE("ellipticity of quadratics") {
  const auto f = IntegrandSpec::power(1.0, 2.0);
  Rng rng(1);
  for (int i = 0; i < 10; ++i) {
    const GradMat z = random_in_ball(rng, 2, 2, 4.0);
    const auto e = ellipticity_eigs(f, z);
    CHECK(e.lambda_min == doctest::Approx(2.0).epsilon(1e-13));
    CHECK(e.lambda_max == doctest::Approx(2.0).epsilon(1e-13));
    CHECK(ellipticity_ratio(f, z) == doctest::Approx(1.0).epsilon(1e-13));
  }
}

TEST_CASE("model ellipticity along the first axis") {
  for (double t : {0.0, 0.3, 2.0, 10.0, 100.0}) {
    const auto e = ellipticity_eigs(quartic_axis_model(), row(t, 0.0));
    CHECK(e.lambda_min == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(e.lambda_max == doctest::Approx(2.0 + 12.0 * t * t).epsilon(1e-12));
    CHECK(ellipticity_ratio(quartic_axis_model(), row(t, 0.0)) == doctest::Approx(1.0 + 6.0 * t * t).epsilon(1e-12));
  }
  CHECK(ellipticity_ratio(quartic_axis_model(), row(100.0, 0.0)) >
        ellipticity_ratio(quartic_axis_model(), row(10.0, 0.0)));
  try {
    ellipticity_ratio(IntegrandSpec::power(0.0, 4.0), GradMat::Zero(1, 2));
    FAIL("expected degenerate point");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::degenerate_point);
  }
}

TEST_CASE("eigenvalues match the 2x2 characteristic polynomial") {
  const auto f = IntegrandSpec::power(0.5, 3.0) + IntegrandSpec::axis(1, 5.0);
  Rng rng(2);
  for (int i = 0; i < 200; ++i) {
    const GradMat z = random_in_ball(rng, 1, 2, 3.0);
    const Eigen::MatrixXd h = hessian(f, z);
    const double tr = h.trace(), det = h.determinant();
    const double disc = std::sqrt(std::max(0.0, tr * tr / 4.0 - det));
    const auto e = ellipticity_eigs(f, z);
    CHECK(e.lambda_min == doctest::Approx(tr / 2.0 - disc).epsilon(1e-9));
    CHECK(e.lambda_max == doctest::Approx(tr / 2.0 + disc).epsilon(1e-9));
  }
}

TEST_CASE("Marcellini model certifies") {
  for (const char* name : {"marcellini_q4", "marcellini_poly", "vector_q4"}) {
    const auto& b = builtin_example(name);
    const auto cert = check_legendre(b.integrand, b.regime);
    CHECK_MESSAGE(cert.passed, name << ": " << cert.failure);
    CHECK(std::isfinite(cert.constant_assf3));
    CHECK(std::isfinite(cert.constant_assf1));
    CHECK(cert.constant_assf3 <= b.regime.L);
  }
}

TEST_CASE("every built-in certifies with its registered L") {
  for (const auto& b : builtin_examples()) {
    const auto cert = check_legendre(b.integrand, b.regime);
    CHECK_MESSAGE(cert.passed, b.name << ": " << cert.failure);
    // Ellipticity ratio relation and the F' growth implication.
    CHECK(std::isfinite(cert.constant_elr));
    CHECK(cert.constant_fprime <= b.regime.L * 2.0);
  }
}

TEST_CASE("power of ell_1 certifies with a sampled constant") {
  const auto f = IntegrandSpec::power(1.0, 3.0) + IntegrandSpec::axis(0, 5.0);
  const Regime r{2, 1, 3.0, 5.0, 1.0, 50.0};
  const auto cert = check_legendre(f, r);
  CHECK(cert.passed);
  CHECK(cert.constant_assf3 < 50.0);
}

TEST_CASE("lower-bound violations carry a witness") {
  // Not p-elliptic for p = 4 near the origin's complement: |z|^2 only grows quadratically.
  const auto f = IntegrandSpec::power(0.0, 2.0) + IntegrandSpec::axis(0, 6.0);
  const Regime r{2, 1, 4.0, 6.0, 0.0, 10.0};
  const auto cert = check_legendre(f, r);
  CHECK_FALSE(cert.passed);
  CHECK_FALSE(cert.lower_bound_ok);
  CHECK(cert.witness);
  CHECK_FALSE(cert.failure.empty());
}

TEST_CASE("equal exponents are rejected") {
  try {
    check_legendre(IntegrandSpec::power(0.0, 2.0), Regime{2, 1, 2.0, 2.0, 0.0, 3.0});
    FAIL("expected rejection");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::equal_exponents);
  }
}

TEST_CASE("homogeneous decomposition") {
  const std::vector<Monomial> terms{{3.0, {0, 0}}, {1.0, {2, 0}}, {1.0, {0, 2}}, {1.0, {4, 0}}};
  const Polynomial p = Polynomial::from_monomials(2, terms);
  const auto comps = homogeneous_decomposition(p);
  REQUIRE(comps.size() == 3);
  CHECK(comps[0].degree == 0);
  CHECK(comps[1].degree == 2);
  CHECK(comps[2].degree == 4);
  Rng rng(3);
  for (int i = 0; i < 200; ++i) {
    const Eigen::VectorXd x = flatten(random_in_ball(rng, 2, 1, 5.0));
    double sum = 0.0;
    for (const auto& c : comps) {
      sum += c.form.eval(x);
      // Euler relation per component.
      CHECK(c.form.gradient(x).dot(x) == doctest::Approx(c.degree * c.form.eval(x)).epsilon(1e-10));
    }
    CHECK(sum == doctest::Approx(p.eval(x)).epsilon(1e-12));
  }
  const std::vector<Monomial> odd{{1.0, {2, 0}}, {1.0, {3, 0}}};
  CHECK_THROWS_AS(homogeneous_decomposition(Polynomial::from_monomials(2, odd)), Error);
  const std::vector<Monomial> negative{{1.0, {2, 0}}, {-1.0, {0, 2}}};
  const auto flagged = homogeneous_decomposition(Polynomial::from_monomials(2, negative));
  CHECK_FALSE(flagged[0].nonnegative);
}

TEST_CASE("polynomial growth exponents") {
  const auto g = polynomial_growth_exponents(marcellini_polynomial(2, 4), 10000, 1e2);
  CHECK(g.p_max == 2.0);
  CHECK(g.q == 4.0);
  CHECK(std::isfinite(g.c));
  const std::vector<Monomial> terms{{1.0, {4, 0}}, {2.0, {2, 2}}, {1.0, {0, 4}}, {1.0, {6, 0}}};
  const auto g6 = polynomial_growth_exponents(Polynomial::from_monomials(2, terms), 2000);
  CHECK(g6.p_max == 4.0);
  CHECK(g6.q == 6.0);
}

TEST_CASE("delta of homogeneous forms") {
  CHECK(delta_of_homogeneous(IntegrandSpec::power(0.0, 4.0), 4, 1, 2).delta < 1e-6);
  CHECK(delta_of_homogeneous(IntegrandSpec::axis(0, 4.0), 4, 1, 2).delta < 1e-6);
  CHECK(delta_of_homogeneous(IntegrandSpec::axis(0, 4.0), 4, 1, 2).span_dim == 1);
  const std::vector<Monomial> terms{{1.0, {4, 0}}, {8.0, {2, 2}}, {16.0, {0, 4}}};
  const auto aniso = IntegrandSpec::polynomial(Polynomial::from_monomials(2, terms));
  const auto d = delta_of_homogeneous(aniso, 4, 1, 2);
  CHECK(d.delta > 0.0);
  CHECK(d.delta < 1.0);
  CHECK_THROWS_AS(delta_of_homogeneous(0.0 * IntegrandSpec::power(0.0, 4.0), 4, 1, 2), Error);
}

TEST_CASE("sum growth") {
  const auto q = IntegrandSpec::power(0.0, 2.0);
  const auto sg = sum_growth(q, Regime{2, 1, 2.0, 2.0, 0.0, 6.0}, IntegrandSpec::axis(0, 4.0), 4);
  CHECK(sg.regime.p == 2.0);
  CHECK(sg.regime.q == 4.0);
  CHECK(sg.certificate.passed);
  // Repeated application across the axes.
  const auto sg2 = sum_growth(q + IntegrandSpec::axis(0, 4.0), sg.regime, IntegrandSpec::axis(1, 6.0), 6);
  CHECK(sg2.regime.q == 6.0);
  try {
    sum_growth(IntegrandSpec::power(0.0, 4.0), Regime{2, 1, 4.0, 4.0, 0.0, 6.0}, IntegrandSpec::axis(0, 4.0), 4);
    FAIL("expected equal exponents");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::equal_exponents);
  }
}

TEST_CASE("gehring exponent") {
  CHECK(gehring_exponent(1.0, 1.0, 0.5) == 1.5);
  CHECK(gehring_exponent(2.0, 10.0, 0.5) == doctest::Approx(39.5 / 39.0).epsilon(1e-15));
  Rng rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 1000; ++i) {
    const double c0 = 1.0 + 20.0 * u(rng), big_m = 1.0 + 1000.0 * u(rng), m = 0.001 + 0.998 * u(rng);
    const double t = gehring_exponent(c0, big_m, m);
    CHECK(t > 1.0);
    CHECK(t < 2.0);
    CHECK(gehring_exponent(c0, big_m * 1.5, m) < t);
  }
  CHECK_THROWS_AS(gehring_exponent(0.5, 1.0, 0.5), Error);
  CHECK_THROWS_AS(gehring_exponent(1.0, 1.0, 1.0), Error);
}

TEST_CASE("check_legendre is identical serial and parallel") {
  omp_set_num_threads(4);
  const auto& b = builtin_example("vector_q4");
  CheckOptions s, p;
  s.exec = Exec::serial;
  p.exec = Exec::parallel;
  const auto a = check_legendre(b.integrand, b.regime, s);
  const auto c = check_legendre(b.integrand, b.regime, p);
  CHECK(a.constant_assf3 == c.constant_assf3);
  CHECK(a.constant_assf1 == c.constant_assf1);
  CHECK(a.constant_elr == c.constant_elr);
}
