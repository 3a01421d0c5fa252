#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "lpq/commands.hpp"
#include "lpq/config.hpp"

using namespace lpq;

namespace {

const std::filesystem::path kData = LPQ_TEST_DATA;
const Regime kPlane{2, 1, 2.0, 4.0, 0.0, 6.0};

std::string csv(const CsvTable& t) {
  std::ostringstream os;
  t.write(os);
  return os.str();
}

Error error_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e;
  }
  FAIL("no error raised");
  return Error(Errc::domain_violation, "");
}

GradMat row(double a, double b) {
  GradMat z(1, 2);
  z << a, b;
  return z;
}

}  // namespace

TEST_CASE("integrand expressions") {
  const IntegrandSpec model = parse_integrand("power(mu=0,p=2) + axis(i=1,q=4) + axis(i=2,q=4)", kPlane);
  const GradMat z = row(0.3, -1.2);
  CHECK(eval(model, z) == doctest::Approx(0.09 + 1.44 + std::pow(0.3, 4) + std::pow(1.2, 4)).epsilon(1e-14));

  const IntegrandSpec tight = parse_integrand("  power( mu = 0 , p=2)+axis(i=1,q=4)\n +axis(i=2, q=4)", kPlane);
  CHECK(eval(tight, z) == eval(model, z));

  const IntegrandSpec quad = parse_integrand("power(mu=1,p=2)", kPlane);
  CHECK(eval(quad, z) == doctest::Approx(1.0 + z.squaredNorm()).epsilon(1e-14));

  const IntegrandSpec scaled = parse_integrand("2.5*axis(i=2,q=4) + 0.5 * power(mu=0,p=2)", kPlane);
  CHECK(eval(scaled, z) == doctest::Approx(2.5 * std::pow(1.2, 4) + 0.5 * z.squaredNorm()).epsilon(1e-14));
}

TEST_CASE("expression errors carry positions") {
  const Error axis = error_of([] { parse_integrand("axis(i=3,q=4)", kPlane); });
  CHECK(axis.code() == Errc::config_semantic);
  CHECK(std::string(axis.what()).find("line 1, column 1") != std::string::npos);

  const Error late = error_of([] { parse_integrand("power(mu=0,p=2) + axis(i=0,q=4)", kPlane, ".", {4, 8}); });
  CHECK(late.code() == Errc::config_semantic);
  CHECK(std::string(late.what()).find("line 4, column 26") != std::string::npos);

  for (const char* bad : {"power(mu=0,p=2) +", "power(mu=0 p=2)", "power(mu=0,p=2))", "axes(i=1,q=4)",
                          "2 * ", "power(mu=x,p=2)", ""}) {
    CAPTURE(bad);
    CHECK(error_of([&] { parse_integrand(bad, kPlane); }).code() == Errc::config_syntax);
  }
}

TEST_CASE("polynomial files") {
  const IntegrandSpec poly = parse_integrand("poly(marcellini.poly)", kPlane, kData);
  const IntegrandSpec model = parse_integrand("power(mu=0,p=2) + axis(i=1,q=4) + axis(i=2,q=4)", kPlane);
  for (const GradMat& z : {row(0.3, -1.2), row(2.0, 0.5), row(0.0, 0.0)})
    CHECK(eval(poly, z) == doctest::Approx(eval(model, z)).epsilon(1e-14));
  CHECK(error_of([] { parse_integrand("poly(missing.poly)", kPlane, kData); }).code() == Errc::config_semantic);

  const auto tmp = std::filesystem::temp_directory_path() / "lpq_test_odd.poly";
  std::ofstream(tmp) << "1 3 0\n1 0 2\n";
  CHECK(error_of([&] { parse_integrand("poly(" + tmp.filename().string() + ")", kPlane, tmp.parent_path()); })
            .code() == Errc::not_even);
  std::filesystem::remove(tmp);
}

TEST_CASE("config files") {
  const ExperimentConfig cfg = load_config(kData / "marcellini.cfg");
  CHECK(cfg.regime.n == 2);
  CHECK(cfg.regime.q == 4.0);
  CHECK(cfg.grid_cells == std::vector<int>{32, 64});
  CHECK(cfg.amplitudes == std::vector<double>{0.5, 1.0, 2.0, 4.0});
  CHECK(cfg.schedule.epsilons.size() == 6);
  CHECK(cfg.conjugate.points.size() == 2);
  CHECK(cfg.integrand.has_value());

  const ExperimentConfig sweep = load_config(kData / "sweep_q.cfg");
  CHECK(sweep.sweep.values == std::vector<double>{3, 4, 5, 6});
  const IntegrandSpec q5 = sweep.integrand_for_q(5.0);
  GradMat z = GradMat::Zero(1, 4);
  z(0, 0) = 2.0;
  CHECK(eval(q5, z) == doctest::Approx(5.0 + 32.0));

  const Error bad = error_of([] { load_config(kData / "bad_axis.cfg"); });
  CHECK(bad.code() == Errc::config_semantic);
  CHECK(std::string(bad.what()).find("line 8, column 8") != std::string::npos);
}

TEST_CASE("config text errors") {
  const char* head = "[regime]\nn = 2\np = 2\nq = 4\nL = 6\n";
  CHECK(error_of([&] { parse_config(std::string(head) + "[nope]\n"); }).code() == Errc::config_semantic);
  CHECK(error_of([&] { parse_config(std::string(head) + "[grid]\ncolour = 3\n"); }).code() == Errc::config_semantic);
  CHECK(error_of([&] { parse_config(std::string(head) + "n = 3\n"); }).code() == Errc::config_semantic);
  CHECK(error_of([&] { parse_config(std::string(head) + "[grid\n"); }).code() == Errc::config_syntax);
  CHECK(error_of([&] { parse_config(std::string(head) + "just words\n"); }).code() == Errc::config_syntax);
  CHECK(error_of([] { parse_config("[regime]\nn = 2\np = 2\n"); }).code() == Errc::config_semantic);
  CHECK_NOTHROW(parse_config(std::string(head) + "# comment\n[integrand]\nexpr = power(mu=1,p=2)\n"));
}

TEST_CASE("exit codes") {
  CHECK(exit_code_for(Errc::non_convergence) == kExitNonConvergence);
  CHECK(exit_code_for(Errc::config_syntax) == kExitConfig);
  CHECK(exit_code_for(Errc::invalid_regime) == kExitConfig);
  CHECK(exit_code_for(Errc::lower_bound_violation) == kExitFailure);
}

TEST_CASE("gehring and moser commands") {
  const std::vector<double> one{1.0}, half{0.5};
  CHECK(csv(run_gehring(one, one, half).table) == "c0,M,m,t\n1,1,0.5,1.5\n");
  MoserCommand mc;
  mc.terms = 3;
  CHECK(csv(run_moser(mc).table) == "i,alpha_i\n0,-1\n1,0\n2,2\n3,6\n");
}

TEST_CASE("check on the model configs") {
  for (const char* name : {"marcellini.cfg", "marcellini_poly.cfg"}) {
    const CommandResult res = run_check(load_config(kData / name));
    CHECK(res.exit_code == kExitOk);
    const std::string out = csv(res.table);
    CHECK(out.find("passed,true") != std::string::npos);
    CHECK(out.find("nan") == std::string::npos);
    CHECK(out.find("inf") == std::string::npos);
  }
}

TEST_CASE("q sweep flags admissibility") {
  const CommandResult res = run_sweep(load_config(kData / "sweep_q.cfg"));
  CHECK(res.exit_code == kExitOk);
  REQUIRE(res.table.rows().size() == 4);
  const auto& header = res.table.header();
  const auto col = std::find(header.begin(), header.end(), "admissible") - header.begin();
  CHECK(res.table.rows()[0][col] == "true");
  CHECK(res.table.rows()[1][col] == "true");
  CHECK(res.table.rows()[2][col] == "true");
  CHECK(res.table.rows()[3][col] == "false");
}

TEST_CASE("outputs are byte-identical across runs") {
  const ExperimentConfig cfg = load_config(kData / "amplitude_sweep.cfg");
  const std::string a = csv(run_sweep(cfg).table);
  const std::string b = csv(run_sweep(cfg).table);
  CHECK(a == b);

  ExperimentConfig small = cfg;
  small.grid_cells = {8};
  small.amplitudes = {1.0, 2.0};
  CHECK(csv(run_solve(small).table) == csv(run_solve(small).table));
  CHECK(csv(run_conjugate(load_config(kData / "marcellini.cfg")).table) ==
        csv(run_conjugate(load_config(kData / "marcellini.cfg")).table));
  CHECK(csv(run_check(cfg).table) == csv(run_check(cfg).table));
}

TEST_CASE("solve reports non-convergence") {
  ExperimentConfig cfg = load_config(kData / "amplitude_sweep.cfg");
  cfg.grid_cells = {8};
  cfg.schedule.max_newton_iters = 1;
  CHECK(run_solve(cfg).exit_code == kExitNonConvergence);
}
