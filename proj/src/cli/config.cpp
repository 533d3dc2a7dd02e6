#include "rcg/config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <initializer_list>
#include <sstream>

#include <json.hpp>

#include "rcg/errors.hpp"

namespace rcg::cli {

using nlohmann::json;

std::string fnv1a_hex(std::string_view text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

namespace {

std::string join(const std::string& path, std::string_view key) {
    return path.empty() ? std::string(key) : path + "." + std::string(key);
}

void check_object(const json& j, const std::string& path) {
    if (!j.is_object()) throw ConfigError(path.empty() ? "<root>" : path, "expected an object");
}

void check_keys(const json& j, const std::string& path, std::initializer_list<std::string_view> allowed) {
    for (const auto& [key, value] : j.items()) {
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
            std::string list;
            for (std::string_view a : allowed) list += (list.empty() ? "" : ", ") + std::string(a);
            throw ConfigError(join(path, key), "unknown key (expected one of: " + list + ")");
        }
    }
}

double as_number(const json& j, const std::string& field) {
    if (!j.is_number()) throw ConfigError(field, "expected a number");
    const double v = j.get<double>();
    if (!std::isfinite(v)) throw ConfigError(field, "must be finite");
    return v;
}

double number(const json& obj, const std::string& path, std::string_view key,
              std::optional<double> fallback = std::nullopt) {
    const std::string field = join(path, key);
    if (!obj.contains(key)) {
        if (fallback) return *fallback;
        throw ConfigError(field, "missing required number");
    }
    return as_number(obj.at(std::string(key)), field);
}

double positive(const json& obj, const std::string& path, std::string_view key,
                std::optional<double> fallback = std::nullopt) {
    const double v = number(obj, path, key, fallback);
    if (!(v > 0.0)) throw ConfigError(join(path, key), "must be positive");
    return v;
}

std::size_t count(const json& obj, const std::string& path, std::string_view key, std::size_t fallback,
                  std::size_t min_value = 1) {
    const std::string field = join(path, key);
    if (!obj.contains(key)) return fallback;
    const json& j = obj.at(std::string(key));
    if (!j.is_number_integer() && !j.is_number_unsigned()) throw ConfigError(field, "expected an integer");
    const auto v = j.get<long long>();
    if (v < static_cast<long long>(min_value)) {
        throw ConfigError(field, "must be >= " + std::to_string(min_value));
    }
    return static_cast<std::size_t>(v);
}

std::string text(const json& obj, const std::string& path, std::string_view key,
                 std::optional<std::string> fallback = std::nullopt) {
    const std::string field = join(path, key);
    if (!obj.contains(key)) {
        if (fallback) return *fallback;
        throw ConfigError(field, "missing required string");
    }
    const json& j = obj.at(std::string(key));
    if (!j.is_string()) throw ConfigError(field, "expected a string");
    return j.get<std::string>();
}

std::vector<double> number_list(const json& obj, const std::string& path, std::string_view key,
                                std::vector<double> fallback) {
    const std::string field = join(path, key);
    if (!obj.contains(key)) return fallback;
    const json& j = obj.at(std::string(key));
    if (!j.is_array() || j.empty()) throw ConfigError(field, "expected a non-empty array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < j.size(); ++i) {
        out.push_back(as_number(j[i], field + "[" + std::to_string(i) + "]"));
    }
    return out;
}

Eigen::VectorXd vector_of(const json& j, const std::string& field) {
    if (j.is_number()) return Eigen::VectorXd::Constant(1, as_number(j, field));
    if (!j.is_array() || j.empty()) throw ConfigError(field, "expected a number or non-empty array");
    Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) {
        v(static_cast<Eigen::Index>(i)) = as_number(j[i], field + "[" + std::to_string(i) + "]");
    }
    return v;
}

Eigen::MatrixXd matrix_of(const json& j, const std::string& field) {
    if (j.is_number()) return Eigen::MatrixXd::Constant(1, 1, as_number(j, field));
    if (!j.is_array() || j.empty()) throw ConfigError(field, "expected a number or array of rows");
    const std::size_t rows = j.size();
    std::size_t cols = 0;
    for (std::size_t i = 0; i < rows; ++i) {
        if (!j[i].is_array() || j[i].empty()) {
            throw ConfigError(field + "[" + std::to_string(i) + "]", "expected a non-empty row");
        }
        if (i == 0) cols = j[i].size();
        if (j[i].size() != cols) throw ConfigError(field, "rows have different lengths");
    }
    Eigen::MatrixXd m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (std::size_t i = 0; i < rows; ++i) {
        for (std::size_t k = 0; k < cols; ++k) {
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) =
                as_number(j[i][k], field + "[" + std::to_string(i) + "][" + std::to_string(k) + "]");
        }
    }
    return m;
}

MarketModel parse_market(const json& j) {
    const std::string path = "market";
    check_object(j, path);
    const std::string kind = text(j, path, "kind");
    try {
        if (kind == "constant") {
            check_keys(j, path, {"kind", "r", "mu", "sigma"});
            if (!j.contains("mu")) throw ConfigError("market.mu", "missing");
            if (!j.contains("sigma")) throw ConfigError("market.sigma", "missing");
            MarketPoint p{positive(j, path, "r"), vector_of(j.at("mu"), "market.mu"),
                          matrix_of(j.at("sigma"), "market.sigma")};
            if (p.sigma.rows() != p.mu.size() || p.sigma.cols() < p.sigma.rows()) {
                throw ConfigError("market.sigma", "must be n x m with n = length of mu and m >= n");
            }
            try {
                return MarketModel::constant(std::move(p));
            } catch (const SingularityError& e) {
                throw ConfigError("market.sigma", e.what());
            }
        }
        if (kind == "periodic") {
            check_keys(j, path, {"kind", "r", "mu", "sigma_mean", "amplitude", "period"});
            const double amp = number(j, path, "amplitude");
            if (!(std::fabs(amp) < 1.0)) throw ConfigError("market.amplitude", "must satisfy |amplitude| < 1");
            return periodic_vol_market(positive(j, path, "r"), number(j, path, "mu"),
                                       positive(j, path, "sigma_mean"), amp, positive(j, path, "period"));
        }
        if (kind == "ou") {
            check_keys(j, path, {"kind", "r", "mu", "nu", "vbar", "rho", "v0", "vol_lo", "vol_hi"});
            OUParams p;
            p.r = positive(j, path, "r");
            p.mu = number(j, path, "mu");
            p.nu = positive(j, path, "nu");
            p.vbar = number(j, path, "vbar", 0.0);
            p.rho = number(j, path, "rho", 0.0);
            if (!(p.rho >= -1.0 && p.rho <= 1.0)) throw ConfigError("market.rho", "must lie in [-1, 1]");
            p.v0 = number(j, path, "v0", p.vbar);
            LogisticVolMap map{positive(j, path, "vol_lo", 0.1), positive(j, path, "vol_hi", 0.6)};
            if (!(map.lo <= map.hi)) throw ConfigError("market.vol_hi", "must be >= vol_lo");
            return MarketModel::ou_stoch_vol(p, map);
        }
    } catch (const DomainError& e) {
        throw ConfigError(path, e.what());
    }
    throw ConfigError("market.kind", "unknown market kind '" + kind + "' (expected constant, periodic or ou)");
}

ConstraintPair parse_constraint(const json& j, double rate) {
    const std::string path = "constraint";
    check_object(j, path);
    check_keys(j, path, {"measure", "mode", "limit", "alpha", "tau"});
    Measure measure;
    try {
        measure = measure_from_string(text(j, path, "measure"));
    } catch (const DomainError& e) {
        throw ConfigError("constraint.measure", e.what());
    }
    RiskParams params;
    params.alpha = number(j, path, "alpha", params.alpha);
    params.tau = number(j, path, "tau", params.tau);
    params.r = rate;
    if (!(params.alpha > 0.0 && params.alpha < 0.5)) throw ConfigError("constraint.alpha", "must lie in (0, 0.5)");
    if (!(params.tau > 0.0)) throw ConfigError("constraint.tau", "must be positive");
    const std::string mode = text(j, path, "mode");
    const double limit = positive(j, path, "limit");
    if (mode == "absolute") return ConstraintPair::absolute(measure, limit, params);
    if (mode == "relative") {
        if (!(limit < 1.0)) throw ConfigError("constraint.limit", "relative limit must lie in (0, 1)");
        return ConstraintPair::relative(measure, limit, params);
    }
    throw ConfigError("constraint.mode", "expected 'absolute' or 'relative', got '" + mode + "'");
}

StrategyRule parse_strategy(const json& j, const std::string& field) {
    if (j.is_string()) {
        const std::string tag = j.get<std::string>();
        if (tag == "merton") return StrategyRule::merton();
        if (tag == "projected_current") return StrategyRule::projected_current();
        if (tag == "projected_limiting") return StrategyRule::projected_limiting();
        if (tag == "relative_projected") return StrategyRule::relative_projected();
        throw ConfigError(field, "unknown strategy '" + tag +
                                     "' (expected merton, projected_current, projected_limiting, "
                                     "relative_projected, {fixed_fraction: c} or {capped_fraction: c})");
    }
    if (j.is_object() && j.size() == 1) {
        if (j.contains("fixed_fraction")) {
            return StrategyRule::fixed_fraction(as_number(j.at("fixed_fraction"), field + ".fixed_fraction"));
        }
        if (j.contains("capped_fraction")) {
            const double c = as_number(j.at("capped_fraction"), field + ".capped_fraction");
            if (!(c >= 0.0)) throw ConfigError(field + ".capped_fraction", "must be >= 0");
            return StrategyRule::capped_fraction(c);
        }
    }
    throw ConfigError(field, "expected a strategy name or {fixed_fraction: c} / {capped_fraction: c}");
}

std::vector<Measure> parse_measures(const json& obj, const std::string& path) {
    if (!obj.contains("measures")) return {Measure::VaR, Measure::TVaR, Measure::LEL};
    const json& j = obj.at("measures");
    const std::string field = join(path, "measures");
    if (!j.is_array() || j.empty()) throw ConfigError(field, "expected a non-empty array of names");
    std::vector<Measure> out;
    for (std::size_t i = 0; i < j.size(); ++i) {
        const std::string f = field + "[" + std::to_string(i) + "]";
        if (!j[i].is_string()) throw ConfigError(f, "expected a measure name");
        try {
            out.push_back(measure_from_string(j[i].get<std::string>()));
        } catch (const DomainError& e) {
            throw ConfigError(f, e.what());
        }
    }
    return out;
}

void require_all(const std::vector<double>& values, const std::string& field, double min_exclusive,
                 bool allow_equal) {
    for (std::size_t i = 0; i < values.size(); ++i) {
        const bool ok = allow_equal ? values[i] >= min_exclusive : values[i] > min_exclusive;
        if (!ok) {
            throw ConfigError(field + "[" + std::to_string(i) + "]",
                              std::string("must be ") + (allow_equal ? ">= " : "> ") +
                                  std::to_string(min_exclusive));
        }
    }
}

}  // namespace

ExperimentConfig parse_config(std::string_view config_text) {
    json root;
    try {
        root = json::parse(config_text, nullptr, true, true);
    } catch (const json::parse_error& e) {
        throw ConfigError("<root>", std::string("malformed config: ") + e.what());
    }
    check_object(root, "");
    check_keys(root, "", {"seed", "market", "constraint", "strategies", "sim", "outputs", "checks",
                          "risk", "delta", "project", "ergodic"});

    ExperimentConfig cfg;
    cfg.hash = fnv1a_hex(config_text);
    if (root.contains("seed")) {
        const json& s = root.at("seed");
        if (!s.is_number_unsigned() && !(s.is_number_integer() && s.get<long long>() >= 0)) {
            throw ConfigError("seed", "expected a non-negative integer");
        }
        cfg.seed = s.get<std::uint64_t>();
    }

    if (root.contains("market")) cfg.market = parse_market(root.at("market"));
    const double rate = cfg.market ? mean_rate(*cfg.market) : RiskParams{}.r;
    if (root.contains("constraint")) {
        try {
            cfg.constraint = parse_constraint(root.at("constraint"), rate);
        } catch (const DomainError& e) {
            throw ConfigError("constraint", e.what());
        }
    }

    if (root.contains("strategies")) {
        const json& s = root.at("strategies");
        if (!s.is_array() || s.empty()) throw ConfigError("strategies", "expected a non-empty array");
        for (std::size_t i = 0; i < s.size(); ++i) {
            cfg.strategies.push_back(parse_strategy(s[i], "strategies[" + std::to_string(i) + "]"));
            const auto& rule = cfg.strategies.back();
            if (rule.kind() == StrategyRule::Kind::RelativeProjected && cfg.constraint &&
                cfg.constraint->wealth_dependent()) {
                throw ConfigError("strategies[" + std::to_string(i) + "]",
                                  "relative_projected needs a relative constraint");
            }
            for (std::size_t k = 0; k + 1 < cfg.strategies.size(); ++k) {
                if (cfg.strategies[k].tag() == rule.tag()) {
                    throw ConfigError("strategies[" + std::to_string(i) + "]", "duplicate strategy '" + rule.tag() + "'");
                }
            }
        }
    }

    if (root.contains("sim")) {
        const json& s = root.at("sim");
        check_object(s, "sim");
        check_keys(s, "sim", {"horizon", "dt", "paths", "x0_wealth", "record_stride", "substeps", "burn_in"});
        cfg.sim.horizon = positive(s, "sim", "horizon", cfg.sim.horizon);
        cfg.sim.dt = positive(s, "sim", "dt", cfg.sim.dt);
        if (!(cfg.sim.horizon >= cfg.sim.dt)) throw ConfigError("sim.horizon", "must be >= sim.dt");
        cfg.sim.paths = count(s, "sim", "paths", cfg.sim.paths);
        cfg.sim.x0_wealth = positive(s, "sim", "x0_wealth", cfg.sim.x0_wealth);
        cfg.sim.record_stride = count(s, "sim", "record_stride", cfg.sim.record_stride);
        cfg.sim.substeps = count(s, "sim", "substeps", cfg.sim.substeps);
        if (cfg.sim.substeps > 1 && cfg.market && cfg.market->kind() == MarketModel::Kind::OUStochVol) {
            throw ConfigError("sim.substeps", "must be 1 for the ou market");
        }
        cfg.burn_in = number(s, "sim", "burn_in", 0.0);
        if (!(cfg.burn_in >= 0.0 && cfg.burn_in <= 0.9)) throw ConfigError("sim.burn_in", "must lie in [0, 0.9]");
    }
    cfg.sim.seed = cfg.seed;

    if (root.contains("outputs")) {
        const json& o = root.at("outputs");
        check_object(o, "outputs");
        check_keys(o, "outputs", {"format", "path", "per_path"});
        const std::string fmt = text(o, "outputs", "format", "csv");
        if (fmt == "csv") cfg.outputs.format = OutputFormat::Csv;
        else if (fmt == "json") cfg.outputs.format = OutputFormat::Json;
        else throw ConfigError("outputs.format", "expected 'csv' or 'json'");
        cfg.outputs.path = text(o, "outputs", "path", "");
        if (o.contains("per_path")) {
            if (!o.at("per_path").is_boolean()) throw ConfigError("outputs.per_path", "expected a boolean");
            cfg.outputs.per_path = o.at("per_path").get<bool>();
        }
    }

    if (root.contains("checks")) {
        const json& c = root.at("checks");
        if (!c.is_array()) throw ConfigError("checks", "expected an array of names");
        for (std::size_t i = 0; i < c.size(); ++i) {
            const std::string field = "checks[" + std::to_string(i) + "]";
            if (!c[i].is_string()) throw ConfigError(field, "expected a check name");
            const std::string name = c[i].get<std::string>();
            if (std::find(std::begin(kCheckNames), std::end(kCheckNames), name) == std::end(kCheckNames)) {
                throw ConfigError(field, "unknown check '" + name +
                                             "' (expected growth_target, transience, beta_coalescence, "
                                             "admissibility or ergodic)");
            }
            cfg.checks.push_back(name);
        }
    }

    if (root.contains("risk")) {
        const json& r = root.at("risk");
        check_object(r, "risk");
        check_keys(r, "risk", {"wealth", "zeta_mu", "zeta_sigma", "measures", "samples"});
        cfg.risk.wealth = number_list(r, "risk", "wealth", cfg.risk.wealth);
        require_all(cfg.risk.wealth, "risk.wealth", 0.0, false);
        cfg.risk.zeta_mu = number_list(r, "risk", "zeta_mu", cfg.risk.zeta_mu);
        cfg.risk.zeta_sigma = number_list(r, "risk", "zeta_sigma", cfg.risk.zeta_sigma);
        require_all(cfg.risk.zeta_sigma, "risk.zeta_sigma", 0.0, true);
        cfg.risk.measures = parse_measures(r, "risk");
        cfg.risk.samples = count(r, "risk", "samples", cfg.risk.samples, 1000);
    }

    if (root.contains("delta")) {
        const json& d = root.at("delta");
        check_object(d, "delta");
        check_keys(d, "delta", {"lambdas", "wealths"});
        cfg.delta.lambdas = number_list(d, "delta", "lambdas", cfg.delta.lambdas);
        require_all(cfg.delta.lambdas, "delta.lambdas", 0.0, true);
        cfg.delta.wealths = number_list(d, "delta", "wealths", cfg.delta.wealths);
        require_all(cfg.delta.wealths, "delta.wealths", 0.0, false);
    }

    if (root.contains("project")) {
        const json& p = root.at("project");
        check_object(p, "project");
        check_keys(p, "project", {"instances", "max_assets", "wealth"});
        cfg.project.instances = count(p, "project", "instances", cfg.project.instances);
        cfg.project.max_assets = static_cast<int>(count(p, "project", "max_assets", 3));
        if (cfg.project.max_assets > 3) throw ConfigError("project.max_assets", "must be <= 3");
        cfg.project.wealth = positive(p, "project", "wealth", cfg.project.wealth);
    }

    if (root.contains("ergodic")) {
        const json& e = root.at("ergodic");
        check_object(e, "ergodic");
        check_keys(e, "ergodic", {"horizon", "dt", "nodes", "rel_tol"});
        cfg.ergodic.horizon = positive(e, "ergodic", "horizon", cfg.ergodic.horizon);
        cfg.ergodic.dt = positive(e, "ergodic", "dt", cfg.ergodic.dt);
        if (!(cfg.ergodic.horizon >= cfg.ergodic.dt)) throw ConfigError("ergodic.horizon", "must be >= ergodic.dt");
        cfg.ergodic.nodes = static_cast<int>(count(e, "ergodic", "nodes", 50, 2));
        cfg.ergodic.rel_tol = positive(e, "ergodic", "rel_tol", cfg.ergodic.rel_tol);
    }
    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("--config", "cannot open '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

}  // namespace rcg::cli
