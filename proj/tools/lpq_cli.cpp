// Command line runner: every subcommand prints one CSV table.
#include <CLI11.hpp>

#include <fstream>
#include <iostream>

#include "lpq/commands.hpp"

namespace {

const std::string kFooter = std::string(R"(Config files are plain text with `key = value` lines under sections:
  seed = <int>                      (before any section)
  [regime]      n, N, p, q, mu, L
  [integrand]   expr = <expression>
  [grid]        cells_per_side = <int list>
  [schedule]    count = <k> | epsilons = <list>; mollifier_widths, tol_energy,
                tol_residual, max_newton_iters
  [boundary]    family = zero|affine|sine|random; amplitudes = <list>
  [diagnostics] estimates = hdes,sup,revh,logdecay,cacc,stress,gehring;
                region = ball|cube; center; radius; sobolev_exp; t_grid; cap;
                radii; alphas; max_ratio
  [sweep]       parameter = q|amplitude; values = <list>; workers = <int>
  [check]       samples, r_min, radius
  [conjugate]   count, radius, points = <a,b,...; c,d,...>
'#' starts a comment. In a q sweep, `$q` inside expr is replaced by the value.

Integrand expressions (whitespace-insensitive, axis indices 1-based):
  )") + std::string(lpq::kIntegrandGrammar) + R"(
Polynomial files hold one monomial per line: coeff e1 ... eD.

Exit codes: 0 success, 1 certification/diagnostic failure, 2 config error,
3 solver non-convergence.)";

int emit(const lpq::CommandResult& res, const std::string& output) {
  if (output.empty() || output == "-") {
    res.table.write(std::cout);
  } else {
    std::ofstream os(output);
    if (!os) {
      std::cerr << "cannot write " << output << "\n";
      return lpq::kExitConfig;
    }
    res.table.write(os);
  }
  return res.exit_code;
}

template <class Fn>
int guarded(Fn&& fn) {
  try {
    return fn();
  } catch (const lpq::Error& e) {
    std::cerr << e.what() << "\n";
    return lpq::exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << e.what() << "\n";
    return lpq::kExitFailure;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Legendre (p,q)-growth integrands: certification, duality, regularized Dirichlet solves and "
               "regularity diagnostics."};
  app.footer(kFooter);
  app.require_subcommand(1);

  std::string config_path;
  std::string output;
  std::string out_dir;

  auto add_config_command = [&](const char* name, const char* about) {
    CLI::App* sub = app.add_subcommand(name, about);
    sub->add_option("config", config_path, "experiment config file")->required()->check(CLI::ExistingFile);
    sub->add_option("-o,--output", output, "CSV destination (default stdout)");
    return sub;
  };
  CLI::App* check = add_config_command("check", "certify Legendre (p,q)-growth of the integrand");
  CLI::App* conj = add_config_command("conjugate", "tabulate the Fenchel conjugate and its maximizer");
  CLI::App* solve = add_config_command("solve", "run the regularized approximation scheme");
  solve->add_option("--out-dir", out_dir, "directory for node and gradient CSV exports");
  CLI::App* diag = add_config_command("diagnose", "measure regularity estimates on solved fields");
  CLI::App* sweep = add_config_command("sweep", "vary q or the amplitude, one diagnostics row per point");

  std::vector<double> c0{1.0}, big_m{1.0}, small_m{0.5};
  CLI::App* geh = app.add_subcommand("gehring", "Gehring exponent t = (2 c0 M - m)/(2 c0 M - 1)");
  geh->add_option("--c0", c0, "structural constant(s), >= 1")->delimiter(',');
  geh->add_option("--M", big_m, "M value(s), >= 1")->delimiter(',');
  geh->add_option("--m", small_m, "m value(s) in (0,1)")->delimiter(',');
  geh->add_option("-o,--output", output, "CSV destination (default stdout)");

  lpq::MoserCommand moser_cmd;
  std::optional<double> gamma;
  std::optional<int> dim;
  double p = 2.0, q = 4.0;
  CLI::App* mos = app.add_subcommand("moser", "Moser iteration exponents and sup bound");
  mos->add_option("--alpha0", moser_cmd.params.alpha0, "starting exponent, >= -1");
  mos->add_option("--gamma", gamma, "contraction factor in (0,1)");
  mos->add_option("--n", dim, "derive gamma from the dimension (with --p, --q when n < 4)");
  mos->add_option("--p", p, "lower exponent for the n < 4 gamma");
  mos->add_option("--q", q, "upper exponent for the n < 4 gamma");
  mos->add_option("--c0", moser_cmd.params.c0, "structural constant, >= 1");
  mos->add_option("--M", moser_cmd.params.M, "M, >= 1");
  mos->add_option("--tau1", moser_cmd.params.tau1, "outer radius");
  mos->add_option("--tau2", moser_cmd.params.tau2, "inner radius, >= 1/8");
  mos->add_option("--v0", moser_cmd.v0, "starting energy V0 (default 1)");
  mos->add_option("--terms", moser_cmd.terms, "print alpha_0..alpha_k instead of the bound");
  mos->add_option("-o,--output", output, "CSV destination (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return lpq::kExitConfig;
  }

  auto with_config = [&](auto&& fn) {
    return guarded([&] { return emit(fn(lpq::load_config(config_path)), output); });
  };
  if (check->parsed()) return with_config([](const auto& cfg) { return lpq::run_check(cfg); });
  if (conj->parsed()) return with_config([](const auto& cfg) { return lpq::run_conjugate(cfg); });
  if (solve->parsed())
    return with_config([&](const auto& cfg) {
      return lpq::run_solve(cfg, out_dir.empty() ? std::nullopt : std::optional<std::filesystem::path>(out_dir));
    });
  if (diag->parsed()) return with_config([](const auto& cfg) { return lpq::run_diagnose(cfg); });
  if (sweep->parsed()) return with_config([](const auto& cfg) { return lpq::run_sweep(cfg); });
  if (geh->parsed()) return guarded([&] { return emit(lpq::run_gehring(c0, big_m, small_m), output); });
  if (mos->parsed()) {
    return guarded([&] {
      if (gamma) moser_cmd.params.gamma = *gamma;
      else if (dim) moser_cmd.params.gamma = lpq::moser_gamma(*dim, p, q);
      return emit(lpq::run_moser(moser_cmd), output);
    });
  }
  return lpq::kExitConfig;
}
