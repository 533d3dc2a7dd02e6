#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include <json.hpp>

#include "rcg/cli.hpp"
#include "rcg/errors.hpp"

using namespace rcg;
using namespace rcg::cli;
namespace fs = std::filesystem;

namespace {

std::string field_of(const std::string& text) {
    try {
        parse_config(text);
    } catch (const ConfigError& e) {
        return e.field();
    }
    return "<no error>";
}

struct TempDir {
    fs::path path;
    TempDir() : path(fs::temp_directory_path() / ("rcg_cli_test_" + std::to_string(::getpid()))) {
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    fs::path write(const std::string& name, const std::string& body) const {
        std::ofstream(path / name) << body;
        return path / name;
    }
};

const char* kConstraint = R"("constraint": {"measure": "VaR", "mode": "relative", "limit": 0.02})";
const char* kMarket = R"("market": {"kind": "constant", "r": 0.03, "mu": 0.05, "sigma": 0.2})";

}  // namespace

TEST_CASE("config parsing: comments, defaults and hash") {
    const std::string text = std::string("{\n  // comment\n  ") + kMarket + ",\n  /* block */ " + kConstraint +
                             ",\n  \"strategies\": [\"merton\", {\"capped_fraction\": 0.5}],\n"
                             "  \"sim\": {\"horizon\": 2, \"dt\": 0.1}\n}";
    const ExperimentConfig cfg = parse_config(text);
    REQUIRE(cfg.market.has_value());
    CHECK(cfg.market->kind() == MarketModel::Kind::Constant);
    CHECK(cfg.constraint->mode() == LimitMode::Relative);
    CHECK(cfg.strategies.size() == 2);
    CHECK(cfg.strategies[1].kind() == StrategyRule::Kind::CappedFraction);
    CHECK(cfg.sim.horizon == 2.0);
    CHECK(cfg.hash == fnv1a_hex(text));
    CHECK(fnv1a_hex("") == "cbf29ce484222325");
    CHECK(fnv1a_hex("a") == "af63dc4c8601ec8c");
}

TEST_CASE("config errors name the offending field") {
    CHECK(field_of(R"({"sim": {"dt": -1}})") == "sim.dt");
    CHECK(field_of(R"({"sim": {"horizon": 1, "dtt": 0.1}})") == "sim.dtt");
    CHECK(field_of(R"({"colour": 1})") == "colour");
    CHECK(field_of(R"({"market": {"kind": "jump"}})") == "market.kind");
    CHECK(field_of(R"({"market": {"kind": "ou", "r": 0.03, "mu": 0.05, "nu": 4, "vbar": 0.5, "rho": 2, "v0": 0.5}})") == "market.rho");
    CHECK(field_of(R"({"market": {"kind": "constant", "r": 0.03, "mu": [0.1, 0.2], "sigma": 0.2}})") == "market.sigma");
    CHECK(field_of(R"({"constraint": {"measure": "VaR", "mode": "relative", "limit": 1.5}})") == "constraint.limit");
    CHECK(field_of(R"({"constraint": {"measure": "ES", "mode": "relative", "limit": 0.1}})") == "constraint.measure");
    CHECK(field_of(R"({"strategies": ["yolo"]})") == "strategies[0]");
    CHECK(field_of(R"({"seed": -3})") == "seed");
    CHECK(field_of(R"({"checks": ["growth", "x"]})").rfind("checks", 0) == 0);
    CHECK(field_of("{ not json") == "<root>");
    CHECK_THROWS_AS(load_config("/nonexistent/rcg.jsonc"), ConfigError);
}

TEST_CASE("CSV and JSON writers") {
    Report r;
    r.command = "risk";
    r.seed = 5;
    r.config_hash = "abc";
    r.add(0, "a,\"b\"", "q", 0.1, "1", 0.01);
    r.check(1, "plain", "q2", 1.0 / 3.0, false, "1", std::nullopt, 1e-3);
    CHECK(r.failed);

    std::ostringstream csv;
    write_csv(r, csv);
    const std::string text = csv.str();
    CHECK(text.find("schema,tool_version,command,seed,config_hash,row,item,quantity,value,std_error,tolerance,unit,status\r\n") == 0);
    CHECK(text.find("\"a,\"\"b\"\"\"") != std::string::npos);
    CHECK(text.find("0.10000000000000001") != std::string::npos);
    CHECK(text.find("0.33333333333333331") != std::string::npos);
    CHECK(text.find(",fail\r\n") != std::string::npos);

    std::ostringstream js;
    write_json(r, js);
    const auto doc = nlohmann::json::parse(js.str());
    CHECK(doc["schema"] == kSchemaVersion);
    CHECK(doc["command"] == "risk");
    CHECK(doc["rows"].size() == 2);
    CHECK(doc["rows"][0]["value"] == "0.10000000000000001");
    CHECK(doc["rows"][1]["status"] == "fail");

    CHECK(format_number(std::nan("")) == "nan");
    CHECK(format_number(-INFINITY) == "-inf");
    CHECK(std::stod(format_number(0.1 + 0.2)) == 0.1 + 0.2);
}

TEST_CASE("risk, delta and project commands") {
    ExperimentConfig cfg = parse_config(std::string("{") + kMarket + "," + kConstraint +
                                        R"(, "risk": {"samples": 20000, "wealth": [2.0]},
                                             "delta": {"lambdas": [0.1, 1.0], "wealths": [1, 100]},
                                             "project": {"instances": 3, "max_assets": 2}})");
    const Report risk = cmd_risk(cfg);
    CHECK_FALSE(risk.failed);
    CHECK(risk.rows.size() == 27 * 7);
    const Report delta = cmd_delta(cfg);
    CHECK_FALSE(delta.failed);
    const Report project = cmd_project(cfg);
    CHECK_FALSE(project.failed);

    cfg.constraint.reset();
    CHECK_THROWS_AS(cmd_delta(cfg), ConfigError);
}

TEST_CASE("run: exit codes and deterministic output") {
    TempDir dir;
    const fs::path good = dir.write("good.jsonc", std::string("{") + kMarket + "," + kConstraint + R"(,
        "seed": 3,
        "strategies": ["merton", "relative_projected"],
        "sim": {"horizon": 20, "dt": 0.05, "paths": 8, "record_stride": 100},
        "checks": ["growth_target", "admissibility"]
    })");
    const fs::path out1 = dir.path / "a.json", out2 = dir.path / "b.json";
    std::ostringstream out, err;
    CHECK(run({"simulate", "--config", good.string(), "--format", "json", "--out", out1.string(), "--quiet"}, out, err) == kExitOk);
    CHECK(run({"simulate", "--config", good.string(), "--format", "json", "--out", out2.string(), "--quiet"}, out, err) == kExitOk);
    std::ifstream a(out1), b(out2);
    const std::string sa((std::istreambuf_iterator<char>(a)), {}), sb((std::istreambuf_iterator<char>(b)), {});
    CHECK(!sa.empty());
    CHECK(sa == sb);
    CHECK(nlohmann::json::accept(sa));

    std::ostringstream csv;
    CHECK(run({"simulate", "--config", good.string(), "--seed", "4", "--paths", "2"}, csv, err) == kExitOk);
    CHECK(csv.str().find(",simulate,4,") != std::string::npos);
    CHECK_FALSE(err.str().empty());

    const fs::path bad = dir.write("bad.jsonc", R"({"sim": {"dt": 0}})");
    std::ostringstream err2;
    CHECK(run({"simulate", "--config", bad.string()}, out, err2) == kExitConfigError);
    CHECK(err2.str().find("sim.dt") != std::string::npos);
    CHECK(run({"simulate"}, out, err) == kExitConfigError);
    CHECK(run({"frobnicate"}, out, err) == kExitConfigError);
    CHECK(run({"simulate", "--config", good.string(), "--format", "xml"}, out, err) == kExitConfigError);

    const fs::path failing = dir.write("fail.jsonc", std::string("{") + kMarket + "," + kConstraint + R"(,
        "strategies": [{"fixed_fraction": 3.0}],
        "sim": {"horizon": 1, "dt": 0.1},
        "checks": ["transience"]
    })");
    CHECK(run({"simulate", "--config", failing.string(), "--quiet"}, out, err) == kExitCheckFailed);
}

TEST_CASE("every row carries a unit") {
    ExperimentConfig cfg = parse_config(std::string("{") + kMarket + "," + kConstraint +
                                        R"(, "strategies": ["merton", "relative_projected"],
                                             "sim": {"horizon": 1, "dt": 0.1, "paths": 2},
                                             "risk": {"samples": 1000, "wealth": [1.0]},
                                             "project": {"instances": 1, "max_assets": 1},
                                             "checks": ["growth_target", "transience", "admissibility"]})");
    for (const Report& r : {cmd_risk(cfg), cmd_delta(cfg), cmd_project(cfg), cmd_simulate(cfg)}) {
        CAPTURE(r.command);
        for (const ReportRow& row : r.rows) CHECK(!row.unit.empty());
        CHECK(r.config_hash == cfg.hash);
    }
}
