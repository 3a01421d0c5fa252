#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "lpq/integrands.hpp"
#include "lpq/solver.hpp"

namespace lpq {

/// Grammar of the integrand expression, reproduced by `lpq --help`.
inline constexpr std::string_view kIntegrandGrammar =
    "expr := term ('+' term)*; term := [coeff '*'] atom; atom := 'power(mu=<r>,p=<r>)' | "
    "'axis(i=<int>,q=<r>)' | 'poly(<file>)'";

/// Where a token sits in the config text (1-based).
struct SourcePos {
  int line = 1;
  int column = 1;
};

/// Parses an integrand expression. Axis indices are 1-based and must not
/// exceed r.n; poly files resolve against base_dir. Errors carry line and
/// column relative to `origin`.
IntegrandSpec parse_integrand(std::string_view expr, const Regime& r, const std::filesystem::path& base_dir = ".",
                              SourcePos origin = {});

/// Lines of `coeff e1 ... eD`; '#' starts a comment.
Polynomial read_polynomial_file(const std::filesystem::path& path);

struct DiagnosticsConfig {
  std::vector<std::string> estimates{"hdes", "sup", "revh", "logdecay", "cacc", "stress", "gehring"};
  RegionKind region_kind = RegionKind::ball;
  std::vector<double> center;  // empty means the box center
  double radius = 0.5;
  std::optional<double> sobolev_exp;
  std::vector<double> t_grid{1.1, 1.2, 1.3, 1.4, 1.5, 1.6, 1.7, 1.8, 1.9};
  double cap = 10.0;
  std::vector<double> radii{0.25, 0.125, 0.0625, 0.03125};
  std::vector<double> alphas{-1.0, 0.0, 2.0};
  double max_ratio = std::numeric_limits<double>::infinity();

  Region region(int dim) const;
};

struct SweepConfig {
  std::string parameter = "q";  // q or amplitude
  std::vector<double> values;
  int workers = 0;              // 0 keeps the OpenMP default
};

struct CheckConfig {
  int samples = 10000;
  double r_min = 1e-3;
  double radius = 1e3;
};

struct ConjugateConfig {
  int count = 20;
  double radius = 3.0;
  std::vector<std::vector<double>> points;  // row-major N x n entries
};

struct ExperimentConfig {
  Regime regime;
  std::string integrand_expr;
  SourcePos integrand_pos;
  std::optional<IntegrandSpec> integrand;
  std::vector<int> grid_cells{32};
  Schedule schedule = Schedule::dyadic(6);
  std::string boundary_family = "sine";
  std::vector<double> amplitudes{1.0};
  DiagnosticsConfig diagnostics;
  SweepConfig sweep;
  CheckConfig check;
  ConjugateConfig conjugate;
  std::uint64_t seed = 1;
  std::filesystem::path base_dir = ".";

  /// Re-parses the expression with every `$q` replaced by the given value.
  IntegrandSpec integrand_for_q(double q) const;
};

/// INI-like text: `key = value` lines under [regime], [integrand], [grid],
/// [schedule], [boundary], [diagnostics], [sweep], [check], [conjugate];
/// `seed` may appear before the first section. Throws Errc::config_syntax
/// or Errc::config_semantic with the line and column.
ExperimentConfig parse_config(std::string_view text, const std::filesystem::path& base_dir = ".");
ExperimentConfig load_config(const std::filesystem::path& path);

}  // namespace lpq
