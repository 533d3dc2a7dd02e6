#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>

#include "rcg/acceptance.hpp"
#include "rcg/cli.hpp"
#include "rcg/errors.hpp"
#include "rcg/projection.hpp"
#include "rcg/risk.hpp"
#include "rcg/rng.hpp"

namespace rcg::cli {

namespace {

Report new_report(std::string command, const ExperimentConfig& cfg) {
    Report r;
    r.command = std::move(command);
    r.seed = cfg.seed;
    r.config_hash = cfg.hash;
    return r;
}

const MarketModel& need_market(const ExperimentConfig& cfg, const char* command) {
    if (!cfg.market) throw ConfigError("market", std::string("required by '") + command + "'");
    return *cfg.market;
}

const ConstraintPair& need_constraint(const ExperimentConfig& cfg, const char* command) {
    if (!cfg.constraint) throw ConfigError("constraint", std::string("required by '") + command + "'");
    return *cfg.constraint;
}

std::string short_number(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

bool wants(const ExperimentConfig& cfg, std::string_view check) {
    return std::find(cfg.checks.begin(), cfg.checks.end(), check) != cfg.checks.end();
}

// Long-run growth of a rule whose holding is s(lambda) zeta_M, when known in closed form.
std::optional<double> growth_target(const StrategyRule& rule, const MarketModel& model, const ConstraintPair& pair,
                                    double rate, double hinf) {
    std::function<double(double)> scale;
    switch (rule.kind()) {
        case StrategyRule::Kind::MertonUnconstrained: scale = [](double) { return 1.0; }; break;
        case StrategyRule::Kind::ProjectedCurrent:
        case StrategyRule::Kind::ProjectedLimiting:
        case StrategyRule::Kind::RelativeProjected:
            scale = [&](double x) { return beta_of(pair, x, hinf); };
            break;
        case StrategyRule::Kind::FixedFraction: {
            const double c = rule.fraction();
            scale = [c](double) { return c; };
            break;
        }
        case StrategyRule::Kind::CappedFraction: {
            const double c = rule.fraction();
            scale = [&, c](double x) { return std::min(c, beta_of(pair, x, hinf)); };
            break;
        }
        case StrategyRule::Kind::Custom: return std::nullopt;
    }
    return rate + z_quadrature(model, [&](double x) {
                      const double s = scale(x);
                      return (s - 0.5 * s * s) * x * x;
                  }).value;
}

}  // namespace

Report cmd_risk(const ExperimentConfig& cfg) {
    Report report = new_report("risk", cfg);
    RiskParams params = cfg.constraint ? cfg.constraint->params() : RiskParams{};
    if (!cfg.constraint && cfg.market) params.r = mean_rate(*cfg.market);
    std::size_t row = 0;
    for (Measure m : cfg.risk.measures) {
        for (double x : cfg.risk.wealth) {
            for (double zm : cfg.risk.zeta_mu) {
                for (double zs : cfg.risk.zeta_sigma) {
                    const PortfolioStats st{zm, zs};
                    const std::string item(to_string(m));
                    const double closed = absolute_measure(m, x, st, params);
                    const MonteCarloEstimate mc =
                        monte_carlo_measure(m, x, st, params, derive_seed(cfg.seed, row), cfg.risk.samples);
                    const double tol = 4.0 * mc.std_error + 1e-12 * x;
                    report.add(row, item, "x", x, "currency");
                    report.add(row, item, "zeta_mu", zm, "1/yr");
                    report.add(row, item, "zeta_sigma", zs, "1/sqrt(yr)");
                    report.add(row, item, "closed_form", closed, "currency");
                    report.add(row, item, "mc_oracle", mc.value, "currency", mc.std_error);
                    report.add(row, item, "relative", relative_measure(m, st, params), "1");
                    report.check(row, item, "closed_minus_mc", closed - mc.value,
                                 std::fabs(closed - mc.value) <= tol, "currency", mc.std_error, tol);
                    ++row;
                }
            }
        }
    }
    return report;
}

Report cmd_delta(const ExperimentConfig& cfg) {
    Report report = new_report("delta", cfg);
    const ConstraintPair& pair = need_constraint(cfg, "delta");
    std::vector<double> lambdas = cfg.delta.lambdas;
    std::sort(lambdas.begin(), lambdas.end());
    std::vector<double> wealths = cfg.delta.wealths;
    std::sort(wealths.begin(), wealths.end());
    const double hinf = limit_h(pair);
    double prev_delta = 1.0;
    for (std::size_t i = 0; i < lambdas.size(); ++i) {
        const double lambda = lambdas[i];
        const std::string item = pair.label();
        const double d = delta(pair, lambda);
        report.add(i, item, "lambda", lambda, "1/sqrt(yr)");
        report.add(i, item, "delta", d, "1");
        if (!pair.wealth_dependent()) report.add(i, item, "beta_relative", beta_of(pair, lambda, hinf), "1");
        report.check(i, item, "delta_nonincreasing_in_lambda", d - prev_delta, d <= prev_delta + 1e-12, "1",
                     std::nullopt, 1e-12);
        prev_delta = d;
        double prev_star = 1.0;
        bool monotone = true;
        for (double x : wealths) {
            const double ds = delta_star(pair, lambda, x);
            report.add(i, item, "delta_star@x=" + short_number(x), ds, "1");
            monotone = monotone && ds <= prev_star + 1e-12;
            prev_star = ds;
        }
        report.check(i, item, "delta_star_nonincreasing_in_x", monotone ? 1.0 : 0.0, monotone, "1");
        if (pair.wealth_dependent()) {
            const double far = 1e12 * std::max(pair.threshold(), 1.0);
            const double gap = delta_star(pair, lambda, far) - d;
            report.check(i, item, "delta_star_limit_gap", gap, std::fabs(gap) <= 1e-9, "1", std::nullopt, 1e-9);
        }
    }
    return report;
}

Report cmd_project(const ExperimentConfig& cfg) {
    Report report = new_report("project", cfg);
    const ConstraintPair& pair = need_constraint(cfg, "project");
    if (pair.h(cfg.project.wealth) == kInfinity) {
        throw ConfigError("project.wealth", "must exceed the constraint threshold so the admissible set is bounded");
    }
    std::mt19937_64 engine(derive_seed(cfg.seed, 3));
    constexpr double kSinTol = 1e-5;
    constexpr double kDistTol = 1e-6;
    constexpr double kBoundaryTol = 1e-9;
    for (std::size_t i = 0; i < cfg.project.instances; ++i) {
        const acceptance::ProjectionInstance inst =
            acceptance::random_binding_instance(engine, pair, cfg.project.max_assets, cfg.project.wealth);
        const ConstraintSetQuery q{inst.mu, inst.sigma, inst.wealth};
        const ProjectionResult proj = project_merton(pair, q);
        const Eigen::VectorXd oracle = oracle_project(pair, q, {.seed = derive_seed(cfg.seed, 1000 + i)});
        const MertonData merton = merton_proportion(inst.mu, inst.sigma);
        const double d_proj = d_sigma(proj.zeta_proj, merton.zeta_m, inst.sigma);
        const double d_oracle = d_sigma(oracle, merton.zeta_m, inst.sigma);
        const double s = acceptance::sin_angle(oracle, merton.zeta_m);
        const PortfolioStats st = portfolio_stats(proj.zeta_proj, inst.mu, inst.sigma);
        const double residual = pair.f(st) - pair.h(inst.wealth);
        const std::string item = "n=" + std::to_string(inst.mu.size()) + ",m=" + std::to_string(inst.sigma.cols());
        report.add(i, item, "beta", proj.beta, "1");
        report.add(i, item, "lambda", merton.lambda, "1/sqrt(yr)");
        report.add(i, item, "d_sigma_projection", d_proj, "1/sqrt(yr)");
        report.add(i, item, "d_sigma_oracle", d_oracle, "1/sqrt(yr)");
        report.check(i, item, "sin_angle_oracle", s, s <= kSinTol, "1", std::nullopt, kSinTol);
        report.check(i, item, "distance_excess", d_oracle - d_proj, d_oracle - d_proj <= kDistTol, "1/sqrt(yr)",
                     std::nullopt, kDistTol);
        report.check(i, item, "boundary_residual", residual, std::fabs(residual) <= kBoundaryTol, "1",
                     std::nullopt, kBoundaryTol);
    }
    return report;
}

Report cmd_simulate(const ExperimentConfig& cfg) {
    Report report = new_report("simulate", cfg);
    const MarketModel& model = need_market(cfg, "simulate");
    const ConstraintPair& pair = need_constraint(cfg, "simulate");
    if (cfg.strategies.empty()) throw ConfigError("strategies", "required by 'simulate'");
    for (std::size_t i = 0; i < cfg.strategies.size(); ++i) {
        if (cfg.strategies[i].kind() == StrategyRule::Kind::RelativeProjected && pair.wealth_dependent()) {
            throw ConfigError("strategies[" + std::to_string(i) + "]", "relative_projected needs a relative constraint");
        }
    }
    SimConfig sim = cfg.sim;
    sim.seed = cfg.seed;
    const SimulationRun run = simulate(model, pair, cfg.strategies, sim);
    const double rate = mean_rate(model);
    const double hinf = limit_h(pair);
    const GrowthTargets targets = growth_targets(model, pair);

    for (std::size_t r = 0; r < cfg.strategies.size(); ++r) {
        const StrategyRule& rule = cfg.strategies[r];
        const std::vector<PathResult>& paths = run.results[r];
        const GrowthSummary g = summarize_growth(paths, cfg.burn_in);
        const std::string& item = rule.tag();
        report.add(r, item, "paths", static_cast<double>(g.paths), "count");
        report.add(r, item, "growth_mean", g.mean, "1/yr", g.std_error);
        const std::optional<double> target = growth_target(rule, model, pair, rate, hinf);
        if (target) report.add(r, item, "growth_target", *target, "1/yr");
        const bool projected = rule.kind() == StrategyRule::Kind::ProjectedCurrent ||
                               rule.kind() == StrategyRule::Kind::ProjectedLimiting ||
                               rule.kind() == StrategyRule::Kind::RelativeProjected;
        if (projected) report.add(r, item, "growth_target_naive", targets.naive, "1/yr");

        if (wants(cfg, "growth_target") && target) {
            const double tol = g.std_error > 0.0 ? 3.0 * g.std_error : 1e-9;
            report.check(r, item, "growth_minus_target", g.mean - *target, std::fabs(g.mean - *target) <= tol, "1/yr",
                         g.std_error, tol);
        }
        std::size_t non_transient = 0;
        std::size_t inadmissible = 0;
        for (const PathResult& p : paths) {
            non_transient += p.non_transient_steps;
            inadmissible += p.inadmissible_steps;
        }
        if (wants(cfg, "transience")) {
            report.check(r, item, "non_transient_steps", static_cast<double>(non_transient), non_transient == 0,
                         "count", std::nullopt, 0.0);
        }
        if (wants(cfg, "admissibility") && rule.kind() != StrategyRule::Kind::MertonUnconstrained &&
            rule.kind() != StrategyRule::Kind::FixedFraction) {
            report.check(r, item, "inadmissible_steps", static_cast<double>(inadmissible), inadmissible == 0, "count",
                         std::nullopt, 0.0);
        }
        if (wants(cfg, "beta_coalescence") && rule.kind() == StrategyRule::Kind::ProjectedCurrent) {
            std::size_t below = 0;
            for (const PathResult& p : paths) below += p.late_beta_gap < 0.01 ? 1 : 0;
            const double frac = static_cast<double>(below) / static_cast<double>(paths.size());
            report.check(r, item, "late_beta_gap_below_0.01_fraction", frac, frac >= 0.99, "1", std::nullopt, 0.99);
        }
        if (cfg.outputs.per_path) {
            for (std::size_t p = 0; p < paths.size(); ++p) {
                report.add(p, item, "path_log_wealth_final", paths[p].log_wealth.back(), "log(currency)");
                report.add(p, item, "path_growth", growth_rate(paths[p], cfg.burn_in), "1/yr");
            }
        }
    }

    if (wants(cfg, "ergodic") && model.kind() != MarketModel::Kind::Constant) {
        const auto phi = [&](double x) { return x * x * beta_of(pair, x, hinf); };
        const ErgodicValue quad = z_quadrature(model, phi, cfg.ergodic.nodes);
        const ErgodicValue avg =
            z_time_average(model, phi, cfg.ergodic.horizon, cfg.ergodic.dt, derive_seed(cfg.seed, 0xe7));
        const std::size_t row = cfg.strategies.size();
        report.add(row, "ergodic", "z_quadrature", quad.value, "1/yr");
        report.add(row, "ergodic", "z_time_average", avg.value, "1/yr", avg.error_estimate);
        const double rel = std::fabs(avg.value - quad.value) / std::fabs(quad.value);
        report.check(row, "ergodic", "relative_error", rel, rel <= cfg.ergodic.rel_tol, "1", std::nullopt,
                     cfg.ergodic.rel_tol);
    }
    return report;
}

Report cmd_verify(std::uint64_t seed, std::ostream* lines) {
    Report report;
    report.command = "verify";
    report.seed = seed;
    report.config_hash = "";
    const auto results = acceptance::run_all({seed}, [&](const acceptance::CriterionResult& r) {
        if (lines) *lines << acceptance::format_line(r) << '\n' << std::flush;
    });
    for (const auto& r : results) {
        const auto row = static_cast<std::size_t>(r.id);
        report.check(row, r.name + ": " + r.detail, "passed", r.passed ? 1.0 : 0.0, r.passed, "1");
    }
    return report;
}

}  // namespace rcg::cli
