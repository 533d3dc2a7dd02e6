#include <algorithm>
#include <fstream>
#include <optional>

#include <CLI11.hpp>

#include "rcg/cli.hpp"
#include "rcg/errors.hpp"

namespace rcg::cli {

namespace {

struct Flags {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out;
    std::string format;
    std::optional<std::size_t> paths;
    bool quiet = false;
};

void add_common(CLI::App* cmd, Flags& flags, bool needs_config) {
    auto* opt = cmd->add_option("--config", flags.config, "Experiment config (JSON with comments)");
    if (needs_config) opt->required();
    cmd->add_option("--seed", flags.seed, "Seed, overriding the config");
    cmd->add_option("--out", flags.out, "Output file (default: standard output)");
    cmd->add_option("--format", flags.format, "Output format")->check(CLI::IsMember({"csv", "json"}));
    cmd->add_option("--paths", flags.paths, "Number of simulated paths, overriding the config")
        ->check(CLI::PositiveNumber);
    cmd->add_flag("--quiet", flags.quiet, "Suppress the summary on standard error");
}

void summarize(const Report& report, std::ostream& err) {
    std::size_t failed = 0;
    std::size_t checks = 0;
    for (const ReportRow& r : report.rows) {
        if (r.status.empty()) continue;
        ++checks;
        if (r.status == "fail") {
            ++failed;
            err << "FAIL " << r.item << ' ' << r.quantity << " = " << format_number(r.value) << '\n';
        }
    }
    err << report.command << ": " << report.rows.size() << " rows, " << checks << " checks, " << failed
        << " failed\n";
}

}  // namespace

int run(std::vector<std::string> args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Growth-optimal portfolios under VaR/TVaR/LEL constraints", "rcgrowth"};
    app.set_version_flag("--version", std::string(tool_version()));
    app.require_subcommand(1);
    Flags flags;
    auto* risk = app.add_subcommand("risk", "Closed-form risk measures against Monte Carlo");
    auto* delta = app.add_subcommand("delta", "Tabulate delta and delta*");
    auto* project = app.add_subcommand("project", "Projection of the Merton proportion against a brute-force oracle");
    auto* simulate = app.add_subcommand("simulate", "Simulate strategies and run checks");
    auto* verify = app.add_subcommand("verify", "Run the acceptance suite");
    for (auto* cmd : {risk, delta, project, simulate}) add_common(cmd, flags, true);
    add_common(verify, flags, false);

    std::reverse(args.begin(), args.end());
    try {
        app.parse(args);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForVersion&) {
        out << tool_version() << '\n';
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return kExitConfigError;
    }

    try {
        Report report;
        OutputFormat format = OutputFormat::Csv;
        std::string out_path;
        if (verify->parsed()) {
            std::uint64_t seed = flags.seed.value_or(20240611);
            if (!flags.config.empty()) {
                const ExperimentConfig cfg = load_config(flags.config);
                seed = flags.seed.value_or(cfg.seed);
                format = cfg.outputs.format;
                out_path = cfg.outputs.path;
            }
            report = cmd_verify(seed, flags.quiet ? nullptr : &err);
        } else {
            ExperimentConfig cfg = load_config(flags.config);
            if (flags.seed) cfg.seed = cfg.sim.seed = *flags.seed;
            if (flags.paths) cfg.sim.paths = *flags.paths;
            format = cfg.outputs.format;
            out_path = cfg.outputs.path;
            if (risk->parsed()) report = cmd_risk(cfg);
            else if (delta->parsed()) report = cmd_delta(cfg);
            else if (project->parsed()) report = cmd_project(cfg);
            else report = cmd_simulate(cfg);
        }
        if (!flags.format.empty()) format = flags.format == "json" ? OutputFormat::Json : OutputFormat::Csv;
        if (!flags.out.empty()) out_path = flags.out;

        if (out_path.empty()) {
            write_report(report, format, out);
        } else {
            std::ofstream file(out_path, std::ios::binary);
            if (!file) throw ConfigError("--out", "cannot write '" + out_path + "'");
            write_report(report, format, file);
        }
        if (!flags.quiet) summarize(report, err);
        return report.failed ? kExitCheckFailed : kExitOk;
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return kExitConfigError;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitCheckFailed;
    }
}

}  // namespace rcg::cli
