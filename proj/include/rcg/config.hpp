#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rcg/constraints.hpp"
#include "rcg/market.hpp"
#include "rcg/simulate.hpp"

namespace rcg::cli {

enum class OutputFormat { Csv, Json };

struct OutputConfig {
    OutputFormat format = OutputFormat::Csv;
    std::string path;       // empty: standard output
    bool per_path = false;  // simulate: one row per path and strategy
};

struct RiskGrid {
    std::vector<double> wealth{1.0};
    std::vector<double> zeta_mu{0.0, 0.05, 0.2};
    std::vector<double> zeta_sigma{0.0, 0.1, 0.3};
    std::vector<Measure> measures{Measure::VaR, Measure::TVaR, Measure::LEL};
    std::size_t samples = 200000;
};

struct DeltaGrid {
    std::vector<double> lambdas{0.05, 0.1, 0.25, 0.5, 1.0, 2.0, 3.0};
    std::vector<double> wealths{1.0, 10.0, 1e3, 1e6};
};

struct ProjectConfig {
    std::size_t instances = 20;
    int max_assets = 3;
    double wealth = 1.0;
};

struct ErgodicConfig {
    double horizon = 5000.0;
    double dt = 0.01;
    int nodes = 50;
    double rel_tol = 0.02;
};

/// Check suite names accepted in "checks".
inline constexpr std::string_view kCheckNames[] = {"growth_target", "transience",
                                                   "beta_coalescence", "admissibility", "ergodic"};

struct ExperimentConfig {
    std::uint64_t seed = 1;
    std::optional<MarketModel> market;
    std::optional<ConstraintPair> constraint;
    std::vector<StrategyRule> strategies;
    SimConfig sim;
    double burn_in = 0.0;
    OutputConfig outputs;
    std::vector<std::string> checks;
    RiskGrid risk;
    DeltaGrid delta;
    ProjectConfig project;
    ErgodicConfig ergodic;
    std::string hash;  // FNV-1a of the config text, hex
};

/// JSON with // and /* */ comments. Every key is validated; unknown keys and
/// out-of-range values raise ConfigError naming the field.
ExperimentConfig parse_config(std::string_view text);
ExperimentConfig load_config(const std::string& path);

std::string fnv1a_hex(std::string_view text);

}  // namespace rcg::cli
