#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "rcg/constraints.hpp"
#include "rcg/market.hpp"

namespace rcg {

struct SimConfig {
    double horizon = 1.0;          // years
    double dt = 0.01;              // years
    std::size_t paths = 1;
    std::uint64_t seed = 1;
    double x0_wealth = 1.0;        // currency
    std::size_t record_stride = 1; // steps between recorded points; the endpoint is always recorded
    /// Each Brownian increment is the sum of this many draws over dt / substeps.
    /// A run with (dt, 2 s) sees the same Brownian path as one with (dt / 2, s).
    /// Constant and periodic markets only.
    std::size_t substeps = 1;

    /// Throws DomainError unless dt > 0, horizon >= dt, paths >= 1, x0_wealth > 0,
    /// record_stride >= 1, substeps >= 1.
    void validate() const;
    std::size_t steps() const;
};

/// What a custom strategy sees at the left endpoint of a step.
struct StepContext {
    double t = 0.0;
    double wealth = 1.0;
    double state = 0.0;
    std::size_t path = 0;
    const MarketPoint* point = nullptr;
    const MertonData* merton = nullptr;
    double beta_current = 1.0;  // beta(t, X(t))
    double beta_limit = 1.0;    // beta(t, infinity)
};

class StrategyRule {
public:
    enum class Kind {
        MertonUnconstrained,
        ProjectedCurrent,
        ProjectedLimiting,
        RelativeProjected,
        FixedFraction,
        CappedFraction,
        Custom
    };
    using CustomFn = std::function<Eigen::VectorXd(const StepContext&)>;

    static StrategyRule merton();
    /// beta(t, X(t)) zeta_M
    static StrategyRule projected_current();
    /// beta(t, infinity) zeta_M
    static StrategyRule projected_limiting();
    /// beta zeta_M for a wealth-independent (relative) constraint.
    static StrategyRule relative_projected();
    /// c zeta_M, ignoring the constraint.
    static StrategyRule fixed_fraction(double c);
    /// min(c, beta(t, X(t))) zeta_M
    static StrategyRule capped_fraction(double c);
    static StrategyRule custom(std::string tag, CustomFn fn);

    /// Abort the simulation with AdmissibilityError when the rule leaves the
    /// constraint set at any step.
    StrategyRule& require_admissible(bool on = true) {
        require_admissible_ = on;
        return *this;
    }

    Kind kind() const noexcept { return kind_; }
    double fraction() const noexcept { return fraction_; }
    const std::string& tag() const noexcept { return tag_; }
    const CustomFn& custom_fn() const noexcept { return fn_; }
    bool requires_admissible() const noexcept { return require_admissible_; }

private:
    StrategyRule(Kind kind, double fraction, std::string tag)
        : kind_(kind), fraction_(fraction), tag_(std::move(tag)) {}

    Kind kind_;
    double fraction_;
    std::string tag_;
    CustomFn fn_;
    bool require_admissible_ = false;
};

struct PathResult {
    std::vector<double> times;
    std::vector<double> log_wealth;
    /// Coefficient of the held portfolio along zeta_M (zeta' mu / lambda^2)
    /// at the left endpoint of the last step before each recorded time.
    std::vector<double> beta_series;
    double growth_estimate = 0.0;
    std::string strategy_tag;
    double drift_integral = 0.0;   // sum_k Q(t_k, zeta_k) dt
    double martingale_part = 0.0;  // sum_k zeta_k' sigma dW_k
    double late_beta_gap = 0.0;    // sup over t >= T/2 of |beta(t,X) - beta(t,inf)| (projected_current)
    std::size_t inadmissible_steps = 0;
    std::size_t non_transient_steps = 0;
    double stop_time = 0.0;
};

/// Stops every strategy on a path once the watched strategy's wealth reaches
/// level_multiple * x0_wealth (capped at the horizon).
struct HittingStop {
    double level_multiple = 2.0;
    std::size_t watch_rule = 0;
};

struct SimulationRun {
    std::vector<std::string> tags;
    std::vector<std::vector<PathResult>> results;  // [rule][path]
};

/// Euler-Maruyama on log-wealth for several strategies driven by common noise.
/// Path p uses its own generator seeded from (cfg.seed, p), so results do not
/// depend on the worker count (RCG_THREADS, default: hardware concurrency).
SimulationRun simulate(const MarketModel& model, const ConstraintPair& pair,
                       std::span<const StrategyRule> rules, const SimConfig& cfg,
                       const std::optional<HittingStop>& stop = std::nullopt);

/// A single path of a single strategy; identical to the matching entry of simulate().
PathResult simulate_path(const MarketModel& model, const ConstraintPair& pair,
                         const StrategyRule& rule, const SimConfig& cfg, std::size_t path_index);

/// (Y(T) - Y(T burn)) / (T - T burn), using the first recorded time at or after T burn.
double growth_rate(const PathResult& result, double burn_in_fraction);

struct GrowthSummary {
    double mean = 0.0;
    double std_error = 0.0;
    std::size_t paths = 0;
};

GrowthSummary summarize_growth(std::span<const PathResult> paths, double burn_in_fraction);

/// zeta' mu >= zeta_sigma^2 / 2, up to a relative rounding allowance of 1e-14
bool check_transience(const Eigen::VectorXd& zeta, const MarketPoint& point);

/// lim h(x) as x grows: 0 for absolute pairs, the constant for relative ones.
double limit_h(const ConstraintPair& pair);

/// r + Z((d - d^2/2) x^2) (corrected) and r + Z(d x^2) (naive: drift without the
/// variance term), where
/// d(x) = beta_of(pair, x, limit_h(pair)).
struct GrowthTargets {
    double corrected = 0.0;
    double naive = 0.0;
};

GrowthTargets growth_targets(const MarketModel& model, const ConstraintPair& pair, int nodes = 50);

/// r + Z(x^2 / 2)
double merton_growth_target(const MarketModel& model, int nodes = 50);

struct BetaCoalescenceReport {
    std::vector<double> late_gaps;
    double threshold = 0.01;
    double fraction_below = 0.0;
    double max_gap = 0.0;
};

BetaCoalescenceReport beta_coalescence_report(const MarketModel& model, const ConstraintPair& pair,
                                              const SimConfig& cfg, double threshold = 0.01);

struct SupermartingaleReport {
    double estimate = 0.0;  // E[X_test(T) / X_ref(T)]
    double std_error = 0.0;
    std::size_t paths = 0;
    bool passed = false;
};

/// Requires a relative pair. The test rule is checked for admissibility at every step.
SupermartingaleReport supermartingale_check(const MarketModel& model, const ConstraintPair& pair,
                                            const StrategyRule& test_rule, const SimConfig& cfg);

struct StopSpec {
    enum class Kind { FixedTime, HittingLevel };
    Kind kind = Kind::FixedTime;
    double level_multiple = 2.0;  // HittingLevel: stop when the test wealth reaches this multiple of X(0)
};

struct FiniteHorizonReport {
    double estimate = 0.0;  // E[log X_ref(stop) - log X_test(stop)]
    double std_error = 0.0;
    double mean_stop_time = 0.0;
    std::size_t paths = 0;
    bool passed = false;
};

FiniteHorizonReport finite_horizon_log_check(const MarketModel& model, const ConstraintPair& pair,
                                             const StrategyRule& test_rule, const StopSpec& stop,
                                             const SimConfig& cfg);

/// Worker count from RCG_THREADS, falling back to the hardware concurrency.
unsigned worker_count();

}  // namespace rcg
