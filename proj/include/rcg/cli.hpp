#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "rcg/config.hpp"
#include "rcg/report.hpp"

namespace rcg::cli {

/// Exit codes of the command-line tool.
inline constexpr int kExitOk = 0;
inline constexpr int kExitCheckFailed = 1;
inline constexpr int kExitConfigError = 2;

/// Rows (measure, x, zeta_mu, zeta_sigma): closed form, Monte Carlo oracle
/// with its SE, and the relative measure.
Report cmd_risk(const ExperimentConfig& cfg);

/// delta(lambda) and delta*(lambda, x) over the configured grids, with
/// monotonicity flags.
Report cmd_delta(const ExperimentConfig& cfg);

/// Random binding instances: projection against the brute-force oracle.
Report cmd_project(const ExperimentConfig& cfg);

/// Growth table with analytic targets and the requested checks.
Report cmd_simulate(const ExperimentConfig& cfg);

/// The full acceptance suite; `lines` receives one line per criterion as it finishes.
Report cmd_verify(std::uint64_t seed, std::ostream* lines);

/// Entry point without the program name; never throws.
int run(std::vector<std::string> args, std::ostream& out, std::ostream& err);

}  // namespace rcg::cli
