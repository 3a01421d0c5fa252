#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <ostream>
#include <vector>

#include "lpq/config.hpp"
#include "lpq/csv.hpp"
#include "lpq/diagnostics.hpp"

namespace lpq {

enum ExitCode : int { kExitOk = 0, kExitFailure = 1, kExitConfig = 2, kExitNonConvergence = 3 };

/// Maps a library error to the process exit code.
int exit_code_for(Errc code) noexcept;

struct CommandResult {
  CsvTable table;
  int exit_code = kExitOk;
};

CommandResult run_check(const ExperimentConfig& cfg);
CommandResult run_conjugate(const ExperimentConfig& cfg);
/// Field exports go to out_dir when given.
CommandResult run_solve(const ExperimentConfig& cfg, const std::optional<std::filesystem::path>& out_dir = {});
CommandResult run_diagnose(const ExperimentConfig& cfg);
CommandResult run_sweep(const ExperimentConfig& cfg);

CommandResult run_gehring(std::span<const double> c0, std::span<const double> M, std::span<const double> m);

struct MoserCommand {
  MoserParams params;
  std::optional<double> v0;
  std::optional<int> terms;  // print the alpha sequence up to this index instead
};
CommandResult run_moser(const MoserCommand& cmd);

/// Default Sobolev exponent for the exponent chain: 2(n-1)/(n-3) for n >= 4,
/// otherwise 4q/p.
double default_sobolev_exp(const Regime& r);

}  // namespace lpq
