#include "rcg/simulate.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <exception>
#include <limits>
#include <thread>

#include "rcg/errors.hpp"
#include "rcg/numerics.hpp"
#include "rcg/projection.hpp"
#include "rcg/rng.hpp"
#include "rcg/simd/kernels.hpp"

namespace rcg {

void SimConfig::validate() const {
    if (!(dt > 0.0) || !std::isfinite(dt)) throw DomainError("sim.dt must be positive");
    if (!(horizon >= dt) || !std::isfinite(horizon)) throw DomainError("sim.horizon must be >= dt");
    if (paths < 1) throw DomainError("sim.paths must be >= 1");
    if (!(x0_wealth > 0.0) || !std::isfinite(x0_wealth)) {
        throw DomainError("sim.x0_wealth must be positive");
    }
    if (record_stride < 1) throw DomainError("sim.record_stride must be >= 1");
    if (substeps < 1) throw DomainError("sim.substeps must be >= 1");
}

std::size_t SimConfig::steps() const {
    return static_cast<std::size_t>(std::max(1.0, std::round(horizon / dt)));
}

StrategyRule StrategyRule::merton() { return {Kind::MertonUnconstrained, 1.0, "merton"}; }
StrategyRule StrategyRule::projected_current() {
    return {Kind::ProjectedCurrent, 1.0, "projected_current"};
}
StrategyRule StrategyRule::projected_limiting() {
    return {Kind::ProjectedLimiting, 1.0, "projected_limiting"};
}
StrategyRule StrategyRule::relative_projected() {
    return {Kind::RelativeProjected, 1.0, "relative_projected"};
}

StrategyRule StrategyRule::fixed_fraction(double c) {
    if (!std::isfinite(c)) throw DomainError("fixed_fraction: non-finite fraction");
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, c);
    return {Kind::FixedFraction, c, "fixed_fraction_" + std::string(buf, res.ptr)};
}

StrategyRule StrategyRule::capped_fraction(double c) {
    if (!(c >= 0.0) || !std::isfinite(c)) throw DomainError("capped_fraction: need c >= 0");
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, c);
    return {Kind::CappedFraction, c, "capped_fraction_" + std::string(buf, res.ptr)};
}

StrategyRule StrategyRule::custom(std::string tag, CustomFn fn) {
    if (!fn) throw DomainError("custom strategy: missing function");
    StrategyRule rule(Kind::Custom, 0.0, std::move(tag));
    rule.fn_ = std::move(fn);
    return rule;
}

double limit_h(const ConstraintPair& pair) {
    switch (pair.mode()) {
        case LimitMode::Absolute: return 0.0;
        case LimitMode::Relative: return pair.h(1.0);
        case LimitMode::Custom:
            return pair.wealth_dependent() ? pair.h(std::numeric_limits<double>::max())
                                           : pair.h(1.0);
    }
    return 0.0;
}

unsigned worker_count() {
    if (const char* env = std::getenv("RCG_THREADS")) {
        unsigned n = 0;
        const auto res = std::from_chars(env, env + std::strlen(env), n);
        if (res.ec == std::errc{} && n > 0) return n;
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

namespace {

constexpr std::size_t kBlock = 64;

struct BetaCache {
    double lambda = -1.0;
    double h = std::numeric_limits<double>::quiet_NaN();
    double beta = 1.0;

    double get(const ConstraintPair& pair, double lam, double hval) {
        if (lam != lambda || hval != h) {
            beta = beta_of(pair, lam, hval);
            lambda = lam;
            h = hval;
        }
        return beta;
    }
};

struct Setup {
    const MarketModel& model;
    const ConstraintPair& pair;
    std::span<const StrategyRule> rules;
    const SimConfig& cfg;
    std::optional<HittingStop> stop;
    std::size_t steps = 0;
    double h_inf = 0.0;
    bool any_custom = false;
    double sqrt_dt = 0.0;
    double sqrt_sub_dt = 0.0;
    // Exact OU transition and the matching correlated increment of W_2.
    double ou_decay = 0.0;
    double ou_scale = 0.0;
    double ou_cov_coef = 0.0;
    double ou_resid = 0.0;
    double log_stop_level = 0.0;
};

Setup make_setup(const MarketModel& model, const ConstraintPair& pair,
                 std::span<const StrategyRule> rules, const SimConfig& cfg,
                 const std::optional<HittingStop>& stop) {
    cfg.validate();
    if (rules.empty()) throw DomainError("simulate: no strategies given");
    Setup s{model, pair, rules, cfg, stop};
    s.steps = cfg.steps();
    s.h_inf = limit_h(pair);
    s.sqrt_dt = std::sqrt(cfg.dt);
    s.sqrt_sub_dt = std::sqrt(cfg.dt / static_cast<double>(cfg.substeps));
    if (cfg.substeps > 1 && model.kind() == MarketModel::Kind::OUStochVol) {
        throw DomainError("sim.substeps > 1 is not supported for the OU model");
    }
    for (const StrategyRule& rule : rules) {
        if (rule.kind() == StrategyRule::Kind::Custom) s.any_custom = true;
        if (rule.kind() == StrategyRule::Kind::RelativeProjected && pair.wealth_dependent()) {
            throw DomainError("relative_projected requires a wealth-independent constraint");
        }
    }
    if (model.kind() == MarketModel::Kind::OUStochVol) {
        const double nu = model.ou().nu;
        const double dt = cfg.dt;
        s.ou_decay = std::exp(-nu * dt);
        const double var_i = -std::expm1(-2.0 * nu * dt) / (2.0 * nu);
        s.ou_scale = std::sqrt(var_i);
        const double cov = -std::expm1(-nu * dt) / nu;
        s.ou_cov_coef = cov / s.ou_scale;
        s.ou_resid = std::sqrt(std::max(0.0, dt - cov * cov / var_i));
    }
    if (stop) {
        if (!(stop->level_multiple > 0.0) || stop->watch_rule >= rules.size()) {
            throw DomainError("hitting stop: need a positive level and a valid watched strategy");
        }
        s.log_stop_level = std::log(stop->level_multiple * cfg.x0_wealth);
    }
    return s;
}

double scale_of(const StrategyRule& rule, double beta_current, double beta_limit) {
    switch (rule.kind()) {
        case StrategyRule::Kind::MertonUnconstrained: return 1.0;
        case StrategyRule::Kind::ProjectedCurrent: return beta_current;
        case StrategyRule::Kind::ProjectedLimiting: return beta_limit;
        case StrategyRule::Kind::RelativeProjected: return beta_current;
        case StrategyRule::Kind::FixedFraction: return rule.fraction();
        case StrategyRule::Kind::CappedFraction: return std::min(rule.fraction(), beta_current);
        case StrategyRule::Kind::Custom: break;
    }
    return 0.0;
}

bool needs_current_beta(StrategyRule::Kind kind) {
    return kind == StrategyRule::Kind::ProjectedCurrent ||
           kind == StrategyRule::Kind::RelativeProjected ||
           kind == StrategyRule::Kind::CappedFraction || kind == StrategyRule::Kind::Custom;
}

// Simulates paths [first, first + count) and stores them at results[r][dest + p].
void run_block(const Setup& s, std::size_t first, std::size_t count, std::size_t dest,
               SimulationRun& out) {
    const simd::Kernels& kernels = simd::active_kernels();
    const MarketModel& model = s.model;
    const ConstraintPair& pair = s.pair;
    const SimConfig& cfg = s.cfg;
    const std::size_t n_rules = s.rules.size();
    const Eigen::Index m = model.n_brownians();
    const bool is_ou = model.kind() == MarketModel::Kind::OUStochVol;
    const double dt = cfg.dt;
    const double horizon = static_cast<double>(s.steps) * dt;
    const double y0 = std::log(cfg.x0_wealth);

    std::vector<NormalStream> streams;
    streams.reserve(count);
    for (std::size_t p = 0; p < count; ++p) streams.emplace_back(derive_seed(cfg.seed, first + p));

    std::vector<double> v(count, model.initial_state());
    std::vector<double> y(n_rules * count, y0);
    std::vector<double> drift(count);
    std::vector<double> shock(count);
    std::vector<double> dw(count * static_cast<std::size_t>(m));
    std::vector<double> lam(count);
    std::vector<double> zm(count);
    std::vector<double> u(count);
    std::vector<double> za(count);
    std::vector<BetaCache> cache_cur(n_rules * count);
    std::vector<BetaCache> cache_lim(n_rules * count);
    std::vector<char> stopped(count, 0);
    std::vector<double> last_coeff(n_rules * count, 0.0);

    std::vector<PathResult*> res(n_rules * count);
    for (std::size_t r = 0; r < n_rules; ++r) {
        for (std::size_t p = 0; p < count; ++p) {
            PathResult& pr = out.results[r][dest + p];
            pr.strategy_tag = s.rules[r].tag();
            pr.times.push_back(0.0);
            pr.log_wealth.push_back(y0);
            pr.beta_series.push_back(0.0);
            pr.stop_time = horizon;
            res[r * count + p] = &pr;
        }
    }

    MertonData merton_k = model.merton_at(0.0, model.initial_state());
    MarketPoint point_k = model.coefficients_at(0.0, model.initial_state());
    Eigen::VectorXd exposure_k = point_k.sigma.transpose() * merton_k.zeta_m;  // sigma' zeta_M
    const double rho = is_ou ? model.ou().rho : 0.0;
    const double rho_bar = std::sqrt(std::max(0.0, 1.0 - rho * rho));
    const double ou_mu = is_ou ? model.ou().mu : 0.0;

    for (std::size_t k = 0; k < s.steps; ++k) {
        const double t = static_cast<double>(k) * dt;
        if (model.kind() == MarketModel::Kind::Periodic) {
            merton_k = model.merton_at(t, 0.0);
            point_k = model.coefficients_at(t, 0.0);
            exposure_k = point_k.sigma.transpose() * merton_k.zeta_m;
        }
        const double rate = is_ou ? model.ou().r : point_k.r;

        for (std::size_t p = 0; p < count; ++p) {
            double* w = dw.data() + p * static_cast<std::size_t>(m);
            if (is_ou) {
                const double z1 = streams[p]();
                za[p] = streams[p]();
                const double zb = streams[p]();
                w[0] = s.sqrt_dt * z1;
                w[1] = s.ou_cov_coef * za[p] + s.ou_resid * zb;
                const double sig = model.vol(v[p]);
                lam[p] = std::fabs(ou_mu) / sig;
                zm[p] = ou_mu / (sig * sig);
                u[p] = (ou_mu / sig) * (rho * w[0] + rho_bar * w[1]);
            } else {
                if (cfg.substeps == 1) {
                    streams[p].fill(std::span<double>(w, static_cast<std::size_t>(m)));
                    for (Eigen::Index j = 0; j < m; ++j) w[j] *= s.sqrt_dt;
                } else {
                    std::fill(w, w + m, 0.0);
                    for (std::size_t sub = 0; sub < cfg.substeps; ++sub) {
                        for (Eigen::Index j = 0; j < m; ++j) w[j] += s.sqrt_sub_dt * streams[p]();
                    }
                }
                double acc = 0.0;
                for (Eigen::Index j = 0; j < m; ++j) acc += exposure_k(j) * w[j];
                lam[p] = merton_k.lambda;
                u[p] = acc;
            }
        }

        const bool late = t >= 0.5 * horizon;
        for (std::size_t r = 0; r < n_rules; ++r) {
            const StrategyRule& rule = s.rules[r];
            const bool want_current = needs_current_beta(rule.kind());
            const bool want_limit = rule.kind() == StrategyRule::Kind::ProjectedLimiting ||
                                    rule.kind() == StrategyRule::Kind::ProjectedCurrent ||
                                    rule.kind() == StrategyRule::Kind::Custom;
            for (std::size_t p = 0; p < count; ++p) {
                if (stopped[p]) {
                    drift[p] = 0.0;
                    shock[p] = 0.0;
                    continue;
                }
                const std::size_t idx = r * count + p;
                const double wealth = std::exp(y[idx]);
                const double hx = pair.h(wealth);
                const double hcur = rule.kind() == StrategyRule::Kind::RelativeProjected ? s.h_inf : hx;
                const double b_cur = want_current ? cache_cur[idx].get(pair, lam[p], hcur) : 1.0;
                const double b_lim = want_limit ? cache_lim[idx].get(pair, lam[p], s.h_inf) : 1.0;

                double zeta_mu = 0.0;
                double zeta_sigma = 0.0;
                double sh = 0.0;
                double coeff = 0.0;
                if (rule.kind() == StrategyRule::Kind::Custom) {
                    MarketPoint local_point;
                    MertonData local_merton;
                    const MarketPoint* pt = &point_k;
                    const MertonData* md = &merton_k;
                    if (is_ou) {
                        local_point = model.coefficients_at(t, v[p]);
                        local_merton = MertonData{Eigen::VectorXd::Constant(1, zm[p]), lam[p]};
                        pt = &local_point;
                        md = &local_merton;
                    }
                    const StepContext ctx{t, wealth, v[p], first + p, pt, md, b_cur, b_lim};
                    const Eigen::VectorXd zeta = rule.custom_fn()(ctx);
                    if (zeta.size() != pt->mu.size() || !zeta.allFinite()) {
                        throw DomainError("custom strategy '" + rule.tag() +
                                          "' returned a vector of the wrong size or non-finite");
                    }
                    zeta_mu = zeta.dot(pt->mu);
                    const Eigen::VectorXd expo = pt->sigma.transpose() * zeta;
                    zeta_sigma = expo.norm();
                    const double* w = dw.data() + p * static_cast<std::size_t>(m);
                    for (Eigen::Index j = 0; j < m; ++j) sh += expo(j) * w[j];
                    coeff = lam[p] > 0.0 ? zeta_mu / (lam[p] * lam[p]) : 0.0;
                } else {
                    coeff = scale_of(rule, b_cur, b_lim);
                    zeta_mu = coeff * lam[p] * lam[p];
                    zeta_sigma = std::fabs(coeff) * lam[p];
                    sh = coeff * u[p];
                }

                drift[p] = rate + zeta_mu - 0.5 * zeta_sigma * zeta_sigma;
                shock[p] = sh;

                PathResult& pr = *res[idx];
                if (hx != kInfinity) {
                    const double fval = pair.f(zeta_mu, zeta_sigma);
                    if (fval > hx + 1e-12 * std::max(1.0, std::fabs(hx))) {
                        ++pr.inadmissible_steps;
                        if (rule.requires_admissible()) {
                            throw AdmissibilityError("strategy '" + rule.tag() + "' left the constraint set on path " +
                                                         std::to_string(first + p),
                                                     k);
                        }
                    }
                }
                if (zeta_mu < 0.5 * zeta_sigma * zeta_sigma -
                                  1e-14 * std::max(1.0, zeta_sigma * zeta_sigma)) {
                    ++pr.non_transient_steps;
                }
                if (late && rule.kind() == StrategyRule::Kind::ProjectedCurrent) {
                    pr.late_beta_gap = std::max(pr.late_beta_gap, std::fabs(b_cur - b_lim));
                }
                pr.drift_integral += drift[p] * dt;
                pr.martingale_part += sh;
                if (k == 0) pr.beta_series[0] = coeff;
                last_coeff[idx] = coeff;
            }
            kernels.log_euler_step(std::span<double>(y.data() + r * count, count), drift, shock, dt);
        }

        if (is_ou) {
            kernels.ou_step(v, za, model.ou().vbar, s.ou_decay, s.ou_scale);
        }

        const double t_next = static_cast<double>(k + 1) * dt;
        std::vector<char> just_stopped(count, 0);
        if (s.stop) {
            for (std::size_t p = 0; p < count; ++p) {
                if (!stopped[p] && y[s.stop->watch_rule * count + p] >= s.log_stop_level) {
                    just_stopped[p] = 1;
                }
            }
        }
        const bool on_stride = (k + 1) % cfg.record_stride == 0 || k + 1 == s.steps;
        for (std::size_t p = 0; p < count; ++p) {
            if (stopped[p]) continue;
            if (!on_stride && !just_stopped[p]) continue;
            for (std::size_t r = 0; r < n_rules; ++r) {
                PathResult& pr = *res[r * count + p];
                pr.times.push_back(t_next);
                pr.log_wealth.push_back(y[r * count + p]);
                pr.beta_series.push_back(last_coeff[r * count + p]);
                if (just_stopped[p]) pr.stop_time = t_next;
            }
            if (just_stopped[p]) stopped[p] = 1;
        }
    }

    for (std::size_t i = 0; i < n_rules * count; ++i) {
        PathResult& pr = *res[i];
        const double y_end = pr.log_wealth.back();
        if (!std::isfinite(y_end)) {
            throw Error("simulate: non-finite log-wealth for strategy '" + pr.strategy_tag + "'");
        }
        pr.growth_estimate = (y_end - y0) / pr.stop_time;
    }
}

SimulationRun run_all(const Setup& s) {
    SimulationRun run;
    for (const StrategyRule& rule : s.rules) run.tags.push_back(rule.tag());
    run.results.assign(s.rules.size(), std::vector<PathResult>(s.cfg.paths));

    const std::size_t blocks = (s.cfg.paths + kBlock - 1) / kBlock;
    const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(worker_count(), blocks));
    std::vector<std::exception_ptr> errors(blocks);
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t b = next++; b < blocks; b = next++) {
            const std::size_t first = b * kBlock;
            const std::size_t count = std::min(kBlock, s.cfg.paths - first);
            try {
                run_block(s, first, count, first, run);
            } catch (...) {
                errors[b] = std::current_exception();
            }
        }
    };
    if (workers <= 1) {
        work();
    } else {
        std::vector<std::jthread> pool;
        for (unsigned i = 0; i < workers; ++i) pool.emplace_back(work);
    }
    for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
    return run;
}

}  // namespace

SimulationRun simulate(const MarketModel& model, const ConstraintPair& pair,
                       std::span<const StrategyRule> rules, const SimConfig& cfg,
                       const std::optional<HittingStop>& stop) {
    return run_all(make_setup(model, pair, rules, cfg, stop));
}

PathResult simulate_path(const MarketModel& model, const ConstraintPair& pair,
                         const StrategyRule& rule, const SimConfig& cfg, std::size_t path_index) {
    const Setup s = make_setup(model, pair, std::span<const StrategyRule>(&rule, 1), cfg, std::nullopt);
    SimulationRun run;
    run.tags.push_back(rule.tag());
    run.results.assign(1, std::vector<PathResult>(1));
    run_block(s, path_index, 1, 0, run);
    return std::move(run.results[0][0]);
}

double growth_rate(const PathResult& result, double burn_in_fraction) {
    if (!(burn_in_fraction >= 0.0 && burn_in_fraction <= 0.9)) {
        throw DomainError("growth_rate: burn_in_fraction must lie in [0, 0.9]");
    }
    if (result.times.size() < 2) {
        throw DomainError("growth_rate: path has fewer than two recorded points");
    }
    const double t_end = result.times.back();
    const double t_burn = burn_in_fraction * t_end;
    const auto it = std::lower_bound(result.times.begin(), result.times.end(), t_burn - 1e-12 * t_end);
    std::size_t i = static_cast<std::size_t>(it - result.times.begin());
    if (i >= result.times.size() - 1) i = result.times.size() - 2;
    return (result.log_wealth.back() - result.log_wealth[i]) / (t_end - result.times[i]);
}

GrowthSummary summarize_growth(std::span<const PathResult> paths, double burn_in_fraction) {
    std::vector<double> rates;
    rates.reserve(paths.size());
    for (const PathResult& p : paths) rates.push_back(growth_rate(p, burn_in_fraction));
    const BatchMeans bm = sample_mean(rates);
    return {bm.mean, bm.std_error, paths.size()};
}

bool check_transience(const Eigen::VectorXd& zeta, const MarketPoint& point) {
    const PortfolioStats st = portfolio_stats(zeta, point.mu, point.sigma);
    const double half_var = 0.5 * st.zeta_sigma * st.zeta_sigma;
    return st.zeta_mu >= half_var - 1e-14 * std::max(1.0, 2.0 * half_var);
}

GrowthTargets growth_targets(const MarketModel& model, const ConstraintPair& pair, int nodes) {
    const double hinf = limit_h(pair);
    const double rate = mean_rate(model);
    const auto d = [&](double x) { return beta_of(pair, x, hinf); };
    GrowthTargets out;
    out.corrected = rate + z_quadrature(model, [&](double x) {
                               const double b = d(x);
                               return (b - 0.5 * b * b) * x * x;
                           }, nodes).value;
    out.naive = rate + z_quadrature(model, [&](double x) { return d(x) * x * x; }, nodes).value;
    return out;
}

double merton_growth_target(const MarketModel& model, int nodes) {
    return mean_rate(model) + z_quadrature(model, [](double x) { return 0.5 * x * x; }, nodes).value;
}

BetaCoalescenceReport beta_coalescence_report(const MarketModel& model, const ConstraintPair& pair,
                                              const SimConfig& cfg, double threshold) {
    const StrategyRule rule = StrategyRule::projected_current();
    const SimulationRun run = simulate(model, pair, std::span<const StrategyRule>(&rule, 1), cfg);
    BetaCoalescenceReport report;
    report.threshold = threshold;
    std::size_t below = 0;
    for (const PathResult& p : run.results[0]) {
        report.late_gaps.push_back(p.late_beta_gap);
        report.max_gap = std::max(report.max_gap, p.late_beta_gap);
        if (p.late_beta_gap < threshold) ++below;
    }
    report.fraction_below = static_cast<double>(below) / static_cast<double>(run.results[0].size());
    return report;
}

SupermartingaleReport supermartingale_check(const MarketModel& model, const ConstraintPair& pair,
                                            const StrategyRule& test_rule, const SimConfig& cfg) {
    if (pair.wealth_dependent()) {
        throw DomainError("supermartingale_check requires a relative constraint");
    }
    StrategyRule test = test_rule;
    test.require_admissible();
    const std::vector<StrategyRule> rules{StrategyRule::relative_projected(), test};
    const SimulationRun run = simulate(model, pair, rules, cfg);
    std::vector<double> ratio(cfg.paths);
    for (std::size_t p = 0; p < cfg.paths; ++p) {
        ratio[p] = std::exp(run.results[1][p].log_wealth.back() - run.results[0][p].log_wealth.back());
    }
    const BatchMeans bm = sample_mean(ratio);
    return {bm.mean, bm.std_error, cfg.paths, bm.mean <= 1.0 + 3.0 * bm.std_error};
}

FiniteHorizonReport finite_horizon_log_check(const MarketModel& model, const ConstraintPair& pair,
                                             const StrategyRule& test_rule, const StopSpec& stop,
                                             const SimConfig& cfg) {
    if (pair.wealth_dependent()) {
        throw DomainError("finite_horizon_log_check requires a relative constraint");
    }
    StrategyRule test = test_rule;
    test.require_admissible();
    const std::vector<StrategyRule> rules{StrategyRule::relative_projected(), test};
    std::optional<HittingStop> hit;
    if (stop.kind == StopSpec::Kind::HittingLevel) {
        hit = HittingStop{stop.level_multiple, 1};
    }
    const SimulationRun run = simulate(model, pair, rules, cfg, hit);
    std::vector<double> diff(cfg.paths);
    double stop_sum = 0.0;
    for (std::size_t p = 0; p < cfg.paths; ++p) {
        diff[p] = run.results[0][p].log_wealth.back() - run.results[1][p].log_wealth.back();
        stop_sum += run.results[0][p].stop_time;
    }
    const BatchMeans bm = sample_mean(diff);
    FiniteHorizonReport report;
    report.estimate = bm.mean;
    report.std_error = bm.std_error;
    report.mean_stop_time = stop_sum / static_cast<double>(cfg.paths);
    report.paths = cfg.paths;
    report.passed = bm.mean >= -3.0 * bm.std_error;
    return report;
}

}  // namespace rcg
