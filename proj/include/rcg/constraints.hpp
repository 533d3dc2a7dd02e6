#pragma once

#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "rcg/risk.hpp"

namespace rcg {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

enum class LimitMode { Absolute, Relative, Custom };

/// A portfolio-constraint correspondence: the admissible set at wealth x is
/// { zeta : f(zeta' mu, |zeta' sigma|) <= h(x) }.
///
/// Built-in pairs come from VaR, TVaR and LEL limits. An absolute limit `a`
/// (currency) gives h(x) = -log[(1 - a/x)^+], infinite for x <= a, so the
/// wealth threshold below which the constraint is void is x0 = a. A relative
/// limit `a` in (0,1) gives the constant h = -log(1 - a).
///
/// Values are immutable once built; copies share nothing mutable.
class ConstraintPair {
public:
    using FFunction = std::function<double(double zeta_mu, double zeta_sigma)>;
    using HFunction = std::function<double(double x)>;

    static ConstraintPair absolute(Measure measure, double limit, const RiskParams& params);
    static ConstraintPair relative(Measure measure, double limit, const RiskParams& params);

    /// `threshold` is x0 for a wealth-dependent h (0 when h is finite everywhere).
    static ConstraintPair custom(FFunction f, HFunction h, bool wealth_dependent,
                                 double threshold = 0.0, std::string label = "custom");

    double f(double zeta_mu, double zeta_sigma) const;
    double f(const PortfolioStats& stats) const { return f(stats.zeta_mu, stats.zeta_sigma); }

    /// (df/dzeta_mu, df/dzeta_sigma); nullopt for custom pairs.
    std::optional<std::pair<double, double>> f_gradient(double zeta_mu, double zeta_sigma) const;

    /// +infinity below the wealth threshold of an absolute pair.
    double h(double x) const;

    LimitMode mode() const noexcept { return mode_; }
    bool wealth_dependent() const noexcept { return wealth_dependent_; }
    std::optional<Measure> measure() const noexcept { return measure_; }
    double limit() const noexcept { return limit_; }
    double threshold() const noexcept { return threshold_; }
    const RiskParams& params() const noexcept { return params_; }
    const std::string& label() const noexcept { return label_; }

    /// The risk-measure bound this pair encodes, evaluated directly from the
    /// closed forms: measure(x, stats) <= limit (absolute) or
    /// measure_r(stats) <= limit (relative). Built-in pairs only.
    bool measure_within_limit(double x, const PortfolioStats& stats) const;

private:
    ConstraintPair() = default;

    LimitMode mode_ = LimitMode::Relative;
    std::optional<Measure> measure_;
    double limit_ = 0.0;
    double threshold_ = 0.0;
    bool wealth_dependent_ = false;
    RiskParams params_{};
    double z_alpha_ = 0.0;
    FFunction custom_f_;
    HFunction custom_h_;
    std::string label_;
};

/// Market data and wealth at which a constraint set is evaluated.
struct ConstraintSetQuery {
    Eigen::VectorXd mu;
    Eigen::MatrixXd sigma;
    double wealth = 1.0;
};

double f_eval(const ConstraintPair& pair, const PortfolioStats& stats);
double h_eval(const ConstraintPair& pair, double x);

/// (zeta' mu, |zeta' sigma|) after checking dimensions.
PortfolioStats portfolio_stats(const Eigen::VectorXd& zeta, const Eigen::VectorXd& mu,
                               const Eigen::MatrixXd& sigma);

bool is_admissible(const ConstraintPair& pair, const ConstraintSetQuery& query,
                   const Eigen::VectorXd& zeta);

/// g(beta) = f(beta lambda^2, beta lambda): f along the ray through the Merton
/// proportion, whose portfolio volatility is lambda.
double g_eval(const ConstraintPair& pair, double lambda, double beta);

/// dg/dbeta; nullopt for custom pairs.
std::optional<double> g_derivative(const ConstraintPair& pair, double lambda, double beta);

/// Evaluation grid for the axiom checks and the lower-bound fit.
struct GridSpec {
    double mu_lo = -2.0;
    double mu_hi = 2.0;
    double sigma_lo = 0.0;
    double sigma_hi = 5.0;
    int mu_points = 81;
    int sigma_points = 101;
};

/// Constants of the quadratic lower bound
///   f(zeta_mu, zeta_sigma) >= k1 zeta_sigma^2 - k2 zeta_mu - k3.
/// k2 is the steepest observed decrease of f in zeta_mu (floored at 1e-6),
/// k1 half the smallest second difference of f in zeta_sigma, and k3 the
/// smallest constant that removes every violation on the grid.
struct LowerBound {
    double kappa1 = 0.0;
    double kappa2 = 0.0;
    double kappa3 = 0.0;
};

LowerBound fit_lower_bound(const ConstraintPair& pair, const GridSpec& grid = {});

/// Number of grid points where the lower bound fails.
int lower_bound_violations(const ConstraintPair& pair, const LowerBound& bound,
                           const GridSpec& grid);

/// Upper bound on |zeta' sigma| over the admissible set:
///   C1 lambda + C2 sqrt(h + C3), C1 = k2/k1, C2 = 1/sqrt(k1), C3 = k3.
double radius_bound(const LowerBound& bound, double lambda, double hval);
double radius_bound(const ConstraintPair& pair, double lambda, double hval);

struct AxiomReport {
    bool convex = true;
    bool nonincreasing_in_mu = true;
    bool nondecreasing_in_sigma = true;
    bool origin_negative = true;
    bool lower_bound = true;
    double f_origin = 0.0;
    LowerBound fit;
    std::vector<std::string> failures;

    bool all_passed() const noexcept { return failures.empty(); }
};

/// Grid checks of the structural assumptions on f. Failures are listed, never thrown.
AxiomReport verify_axioms(const ConstraintPair& pair, const GridSpec& grid = {});

}  // namespace rcg
