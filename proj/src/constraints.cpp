#include "rcg/constraints.hpp"

#include <algorithm>
#include <cmath>

#include "rcg/errors.hpp"
#include "rcg/numerics.hpp"

namespace rcg {

ConstraintPair ConstraintPair::absolute(Measure measure, double limit, const RiskParams& params) {
    params.validate();
    if (!(limit > 0.0) || !std::isfinite(limit)) {
        throw DomainError("absolute risk limit must be positive");
    }
    ConstraintPair pair;
    pair.mode_ = LimitMode::Absolute;
    pair.measure_ = measure;
    pair.limit_ = limit;
    pair.threshold_ = limit;
    pair.wealth_dependent_ = true;
    pair.params_ = params;
    pair.z_alpha_ = norm_quantile(params.alpha);
    pair.label_ = std::string(to_string(measure)) + "-absolute";
    return pair;
}

ConstraintPair ConstraintPair::relative(Measure measure, double limit, const RiskParams& params) {
    params.validate();
    if (!(limit > 0.0 && limit < 1.0)) {
        throw DomainError("relative risk limit must lie in (0,1)");
    }
    ConstraintPair pair;
    pair.mode_ = LimitMode::Relative;
    pair.measure_ = measure;
    pair.limit_ = limit;
    pair.params_ = params;
    pair.z_alpha_ = norm_quantile(params.alpha);
    pair.label_ = std::string(to_string(measure)) + "-relative";
    return pair;
}

ConstraintPair ConstraintPair::custom(FFunction f, HFunction h, bool wealth_dependent,
                                      double threshold, std::string label) {
    if (!f || !h) {
        throw DomainError("custom constraint needs both f and h");
    }
    ConstraintPair pair;
    pair.mode_ = LimitMode::Custom;
    pair.custom_f_ = std::move(f);
    pair.custom_h_ = std::move(h);
    pair.wealth_dependent_ = wealth_dependent;
    pair.threshold_ = threshold;
    pair.label_ = std::move(label);
    return pair;
}

double ConstraintPair::f(double zeta_mu, double zeta_sigma) const {
    if (mode_ == LimitMode::Custom) {
        return custom_f_(zeta_mu, zeta_sigma);
    }
    const double tau = params_.tau;
    const double sqrt_tau = std::sqrt(tau);
    switch (*measure_) {
        case Measure::VaR:
            return -tau * (params_.r + zeta_mu - 0.5 * zeta_sigma * zeta_sigma) -
                   z_alpha_ * zeta_sigma * sqrt_tau;
        case Measure::TVaR:
            return std::log(params_.alpha) - tau * (params_.r + zeta_mu) -
                   log_norm_cdf(z_alpha_ - zeta_sigma * sqrt_tau);
        case Measure::LEL:
            return std::log(params_.alpha) - tau * params_.r -
                   log_norm_cdf(z_alpha_ - zeta_sigma * sqrt_tau);
    }
    throw DomainError("unknown measure");
}

std::optional<std::pair<double, double>> ConstraintPair::f_gradient(double zeta_mu,
                                                                    double zeta_sigma) const {
    (void)zeta_mu;
    if (mode_ == LimitMode::Custom) {
        return std::nullopt;
    }
    const double tau = params_.tau;
    const double sqrt_tau = std::sqrt(tau);
    switch (*measure_) {
        case Measure::VaR:
            return std::make_pair(-tau, tau * zeta_sigma - z_alpha_ * sqrt_tau);
        case Measure::TVaR:
            return std::make_pair(-tau, sqrt_tau * inverse_mills(z_alpha_ - zeta_sigma * sqrt_tau));
        case Measure::LEL:
            return std::make_pair(0.0, sqrt_tau * inverse_mills(z_alpha_ - zeta_sigma * sqrt_tau));
    }
    return std::nullopt;
}

double ConstraintPair::h(double x) const {
    if (!(x > 0.0)) {
        throw DomainError("h: wealth must be positive");
    }
    switch (mode_) {
        case LimitMode::Absolute:
            if (x <= limit_) return kInfinity;
            return -std::log1p(-limit_ / x);
        case LimitMode::Relative:
            return -std::log1p(-limit_);
        case LimitMode::Custom:
            if (wealth_dependent_ && x <= threshold_) return kInfinity;
            return custom_h_(x);
    }
    return kInfinity;
}

bool ConstraintPair::measure_within_limit(double x, const PortfolioStats& stats) const {
    if (mode_ == LimitMode::Custom) {
        throw DomainError("measure_within_limit: custom pairs carry no risk measure");
    }
    if (mode_ == LimitMode::Absolute) {
        return absolute_measure(*measure_, x, stats, params_) <= limit_;
    }
    return relative_measure(*measure_, stats, params_) <= limit_;
}

double f_eval(const ConstraintPair& pair, const PortfolioStats& stats) { return pair.f(stats); }

double h_eval(const ConstraintPair& pair, double x) { return pair.h(x); }

PortfolioStats portfolio_stats(const Eigen::VectorXd& zeta, const Eigen::VectorXd& mu,
                               const Eigen::MatrixXd& sigma) {
    if (zeta.size() != mu.size() || sigma.rows() != mu.size()) {
        throw DomainError("portfolio_stats: dimension mismatch between zeta, mu and sigma");
    }
    return {zeta.dot(mu), (sigma.transpose() * zeta).norm()};
}

bool is_admissible(const ConstraintPair& pair, const ConstraintSetQuery& query,
                   const Eigen::VectorXd& zeta) {
    const PortfolioStats stats = portfolio_stats(zeta, query.mu, query.sigma);
    const double hval = pair.h(query.wealth);
    if (hval == kInfinity) {
        return true;
    }
    return pair.f(stats) <= hval;
}

double g_eval(const ConstraintPair& pair, double lambda, double beta) {
    return pair.f(beta * lambda * lambda, beta * lambda);
}

std::optional<double> g_derivative(const ConstraintPair& pair, double lambda, double beta) {
    const auto grad = pair.f_gradient(beta * lambda * lambda, beta * lambda);
    if (!grad) {
        return std::nullopt;
    }
    return grad->first * lambda * lambda + grad->second * lambda;
}

namespace {

struct Grid {
    std::vector<double> mu;
    std::vector<double> sigma;
};

Grid make_grid(const GridSpec& spec) {
    if (spec.mu_points < 3 || spec.sigma_points < 3 || !(spec.mu_lo < spec.mu_hi) ||
        !(spec.sigma_lo < spec.sigma_hi) || spec.sigma_lo < 0.0) {
        throw DomainError("grid spec: need >= 3 points per axis and sigma_lo >= 0");
    }
    Grid g;
    for (int i = 0; i < spec.mu_points; ++i) {
        g.mu.push_back(spec.mu_lo + (spec.mu_hi - spec.mu_lo) * i / (spec.mu_points - 1));
    }
    for (int j = 0; j < spec.sigma_points; ++j) {
        g.sigma.push_back(spec.sigma_lo +
                          (spec.sigma_hi - spec.sigma_lo) * j / (spec.sigma_points - 1));
    }
    return g;
}

GridSpec refined(const GridSpec& spec) {
    GridSpec fine = spec;
    fine.mu_points = 2 * spec.mu_points - 1;
    fine.sigma_points = 2 * spec.sigma_points - 1;
    return fine;
}

double tolerance(double a, double b) { return 1e-10 * (1.0 + std::fabs(a) + std::fabs(b)); }

}  // namespace

LowerBound fit_lower_bound(const ConstraintPair& pair, const GridSpec& spec) {
    const Grid g = make_grid(spec);
    const double dmu = g.mu[1] - g.mu[0];
    const double ds = g.sigma[1] - g.sigma[0];

    double slope = 0.0;
    double curvature = kInfinity;
    for (double s : g.sigma) {
        for (std::size_t i = 0; i + 1 < g.mu.size(); ++i) {
            slope = std::max(slope, (pair.f(g.mu[i], s) - pair.f(g.mu[i + 1], s)) / dmu);
        }
    }
    for (double m : g.mu) {
        for (std::size_t j = 1; j + 1 < g.sigma.size(); ++j) {
            const double second = (pair.f(m, g.sigma[j + 1]) - 2.0 * pair.f(m, g.sigma[j]) +
                                   pair.f(m, g.sigma[j - 1])) / (ds * ds);
            curvature = std::min(curvature, second);
        }
    }
    LowerBound bound;
    bound.kappa2 = std::max(slope, 1e-6);
    bound.kappa1 = std::max(0.5 * curvature, 1e-8);

    // Fit k3 on the refined grid so the verification grid is covered too.
    const Grid fine = make_grid(refined(spec));
    double k3 = 1e-12;
    for (double m : fine.mu) {
        for (double s : fine.sigma) {
            k3 = std::max(k3, bound.kappa1 * s * s - bound.kappa2 * m - pair.f(m, s));
        }
    }
    bound.kappa3 = k3 * (1.0 + 1e-12) + 1e-14;
    return bound;
}

int lower_bound_violations(const ConstraintPair& pair, const LowerBound& bound,
                           const GridSpec& spec) {
    const Grid g = make_grid(spec);
    int violations = 0;
    for (double m : g.mu) {
        for (double s : g.sigma) {
            const double lower = bound.kappa1 * s * s - bound.kappa2 * m - bound.kappa3;
            if (pair.f(m, s) < lower) {
                ++violations;
            }
        }
    }
    return violations;
}

double radius_bound(const LowerBound& bound, double lambda, double hval) {
    if (!(lambda >= 0.0)) {
        throw DomainError("radius_bound: lambda must be non-negative");
    }
    if (hval == kInfinity) {
        return kInfinity;
    }
    const double c1 = bound.kappa2 / bound.kappa1;
    const double c2 = 1.0 / std::sqrt(bound.kappa1);
    return c1 * lambda + c2 * std::sqrt(std::max(0.0, hval + bound.kappa3));
}

double radius_bound(const ConstraintPair& pair, double lambda, double hval) {
    if (hval == kInfinity) {
        return kInfinity;
    }
    return radius_bound(fit_lower_bound(pair), lambda, hval);
}

AxiomReport verify_axioms(const ConstraintPair& pair, const GridSpec& spec) {
    AxiomReport report;
    const Grid g = make_grid(spec);
    const std::size_t nm = g.mu.size();
    const std::size_t ns = g.sigma.size();
    std::vector<double> values(nm * ns);
    for (std::size_t i = 0; i < nm; ++i) {
        for (std::size_t j = 0; j < ns; ++j) {
            values[i * ns + j] = pair.f(g.mu[i], g.sigma[j]);
        }
    }
    auto at = [&](std::size_t i, std::size_t j) { return values[i * ns + j]; };

    // Midpoint convexity along axis-aligned and diagonal chords of several lengths.
    const int offsets[][2] = {{1, 0}, {0, 1}, {1, 1}, {1, -1}};
    for (int k : {1, 4, 16}) {
        for (const auto& dir : offsets) {
            const long di = dir[0] * k;
            const long dj = dir[1] * k;
            for (long i = 0; i < static_cast<long>(nm); ++i) {
                for (long j = 0; j < static_cast<long>(ns); ++j) {
                    const long i2 = i + 2 * di;
                    const long j2 = j + 2 * dj;
                    if (i2 < 0 || i2 >= static_cast<long>(nm) || j2 < 0 ||
                        j2 >= static_cast<long>(ns)) {
                        continue;
                    }
                    const double a = at(i, j);
                    const double b = at(i2, j2);
                    const double mid = at(i + di, j + dj);
                    if (mid > 0.5 * (a + b) + tolerance(a, b)) {
                        report.convex = false;
                    }
                }
            }
        }
    }
    for (std::size_t i = 0; i + 1 < nm; ++i) {
        for (std::size_t j = 0; j < ns; ++j) {
            if (at(i + 1, j) > at(i, j) + tolerance(at(i, j), at(i + 1, j))) {
                report.nonincreasing_in_mu = false;
            }
        }
    }
    for (std::size_t i = 0; i < nm; ++i) {
        for (std::size_t j = 0; j + 1 < ns; ++j) {
            if (at(i, j + 1) < at(i, j) - tolerance(at(i, j), at(i, j + 1))) {
                report.nondecreasing_in_sigma = false;
            }
        }
    }
    report.f_origin = pair.f(0.0, 0.0);
    report.origin_negative = report.f_origin < 0.0;
    report.fit = fit_lower_bound(pair, spec);
    report.lower_bound = lower_bound_violations(pair, report.fit, refined(spec)) == 0;

    if (!report.convex) report.failures.push_back("convexity: midpoint test failed");
    if (!report.nonincreasing_in_mu) report.failures.push_back("monotonicity: f increases in zeta_mu");
    if (!report.nondecreasing_in_sigma) report.failures.push_back("monotonicity: f decreases in zeta_sigma");
    if (!report.origin_negative) {
        report.failures.push_back("origin: f(0,0) = " + std::to_string(report.f_origin) + " is not negative");
    }
    if (!report.lower_bound) report.failures.push_back("lower bound: fitted quadratic bound violated");
    return report;
}

}  // namespace rcg
