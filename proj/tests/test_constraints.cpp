#include <doctest.h>

#include <cmath>
#include <random>

#include <Eigen/Dense>

#include "rcg/constraints.hpp"
#include "rcg/errors.hpp"

using namespace rcg;

namespace {

const RiskParams kParams{.alpha = 0.05, .tau = 10.0 / 252.0, .r = 0.03};

std::vector<ConstraintPair> builtin_pairs() {
    std::vector<ConstraintPair> out;
    for (Measure m : {Measure::VaR, Measure::TVaR, Measure::LEL}) {
        out.push_back(ConstraintPair::relative(m, 0.03, kParams));
        out.push_back(ConstraintPair::absolute(m, 0.4, kParams));
    }
    return out;
}

}  // namespace

TEST_CASE("the riskless portfolio is strictly admissible") {
    for (const auto& pair : builtin_pairs()) {
        CAPTURE(pair.label());
        CHECK(pair.f(0.0, 0.0) < 0.0);
    }
}

TEST_CASE("f <= h(x) exactly when the risk measure is within its limit") {
    std::mt19937_64 eng(3);
    std::uniform_real_distribution<double> mu(-1.0, 1.0), sig(0.0, 2.0), wealth(0.5, 20.0);
    for (const auto& pair : builtin_pairs()) {
        CAPTURE(pair.label());
        int mismatches = 0;
        for (int i = 0; i < 4000; ++i) {
            const PortfolioStats s{.zeta_mu = mu(eng), .zeta_sigma = sig(eng)};
            const double x = wealth(eng);
            const double gap = pair.f(s) - pair.h(x);
            if (std::abs(gap) < 1e-9) continue;
            mismatches += (gap <= 0.0) != pair.measure_within_limit(x, s);
        }
        CHECK(mismatches == 0);
    }
}

TEST_CASE("analytic gradient matches central differences") {
    for (const auto& pair : builtin_pairs()) {
        CAPTURE(pair.label());
        for (double sig : {0.0, 0.3, 2.0, 8.0}) {
            const auto g = pair.f_gradient(0.1, sig);
            REQUIRE(g.has_value());
            const double e = 1e-6;
            CHECK(g->first == doctest::Approx((pair.f(0.1 + e, sig) - pair.f(0.1 - e, sig)) / (2 * e)).epsilon(1e-6));
            const double lo = std::max(0.0, sig - e);
            CHECK(g->second == doctest::Approx((pair.f(0.1, sig + e) - pair.f(0.1, lo)) / (sig + e - lo)).epsilon(1e-5));
        }
    }
}

TEST_CASE("h for absolute and relative limits") {
    const auto abs_pair = ConstraintPair::absolute(Measure::VaR, 2.0, kParams);
    CHECK(abs_pair.threshold() == 2.0);
    CHECK(abs_pair.h(1.0) == kInfinity);
    CHECK(abs_pair.h(2.0) == kInfinity);
    CHECK(abs_pair.h(4.0) == doctest::Approx(std::log(2.0)));
    CHECK(abs_pair.h(1e9) > 0.0);
    CHECK(abs_pair.h(1e9) < 3e-9);

    const auto rel_pair = ConstraintPair::relative(Measure::TVaR, 0.1, kParams);
    CHECK(rel_pair.h(0.01) == doctest::Approx(-std::log(0.9)));
    CHECK(rel_pair.h(1e6) == rel_pair.h(0.01));
    CHECK_FALSE(rel_pair.wealth_dependent());

    CHECK_THROWS_AS(ConstraintPair::relative(Measure::VaR, 1.0, kParams), DomainError);
    CHECK_THROWS_AS(ConstraintPair::absolute(Measure::VaR, -1.0, kParams), DomainError);
    CHECK_THROWS_AS(abs_pair.h(0.0), DomainError);
}

TEST_CASE("built-in pairs satisfy the structural axioms") {
    for (const auto& pair : builtin_pairs()) {
        CAPTURE(pair.label());
        const AxiomReport report = verify_axioms(pair);
        for (const auto& failure : report.failures) MESSAGE(failure);
        CHECK(report.all_passed());
        CHECK(report.fit.kappa1 > 0.0);
    }
}

TEST_CASE("a non-convex custom pair is reported") {
    const auto pair = ConstraintPair::custom([](double m, double s) { return std::sin(3.0 * s) - m - 0.5; },
                                             [](double) { return 0.0; }, false);
    const AxiomReport report = verify_axioms(pair);
    CHECK_FALSE(report.all_passed());
    CHECK_FALSE(report.convex);
}

TEST_CASE("admissible portfolios lie inside the radius bound") {
    std::mt19937_64 eng(17);
    std::normal_distribution<double> nd;
    Eigen::VectorXd mu(2);
    mu << 0.06, 0.04;
    Eigen::MatrixXd sigma(2, 2);
    sigma << 0.2, 0.05, 0.0, 0.25;
    const double lambda = (sigma.transpose() * (sigma * sigma.transpose()).ldlt().solve(mu)).norm();
    for (const auto& pair : builtin_pairs()) {
        CAPTURE(pair.label());
        const double x = 3.0;
        const double hx = pair.h(x);
        const double bound = radius_bound(pair, lambda, hx);
        const ConstraintSetQuery q{mu, sigma, x};
        double largest = 0.0;
        for (int i = 0; i < 20000; ++i) {
            Eigen::VectorXd zeta(2);
            zeta << nd(eng), nd(eng);
            zeta *= 10.0 * std::abs(nd(eng));
            if (!is_admissible(pair, q, zeta)) continue;
            largest = std::max(largest, portfolio_stats(zeta, mu, sigma).zeta_sigma);
        }
        CHECK(largest > 0.0);
        CHECK(largest <= bound);
    }
}

TEST_CASE("g along the Merton ray") {
    const auto pair = ConstraintPair::relative(Measure::VaR, 0.02, kParams);
    const double lambda = 0.4;
    CHECK(g_eval(pair, lambda, 0.7) == pair.f(0.7 * lambda * lambda, 0.7 * lambda));
    const double e = 1e-6;
    CHECK(*g_derivative(pair, lambda, 0.7) ==
          doctest::Approx((g_eval(pair, lambda, 0.7 + e) - g_eval(pair, lambda, 0.7 - e)) / (2 * e)).epsilon(1e-6));
}

TEST_CASE("is_admissible matches the risk-measure bound on random markets") {
    std::mt19937_64 eng(41);
    std::normal_distribution<double> nd;
    std::uniform_real_distribution<double> wealth(0.05, 30.0), vol(0.05, 0.5);
    for (const auto& pair : builtin_pairs()) {
        CAPTURE(pair.label());
        int mismatches = 0;
        for (int i = 0; i < 1000; ++i) {
            const int n = 1 + i % 3;
            Eigen::VectorXd mu(n), zeta(n);
            Eigen::MatrixXd sigma = Eigen::MatrixXd::Zero(n, n + 1);
            for (int a = 0; a < n; ++a) {
                mu(a) = 0.05 * nd(eng);
                zeta(a) = 2.0 * nd(eng);
                sigma(a, a) = vol(eng);
                for (int b = a + 1; b <= n; ++b) sigma(a, b) = 0.1 * nd(eng);
            }
            const double x = wealth(eng);
            const PortfolioStats s = portfolio_stats(zeta, mu, sigma);
            if (std::abs(pair.f(s) - pair.h(x)) < 1e-9) continue;
            mismatches += is_admissible(pair, {mu, sigma, x}, zeta) != pair.measure_within_limit(x, s);
        }
        CHECK(mismatches == 0);
    }
}

TEST_CASE("admissible sets are convex and shrink with wealth (absolute limits)") {
    std::mt19937_64 eng(43);
    std::normal_distribution<double> nd;
    const Eigen::VectorXd mu{{0.06, 0.04}};
    const Eigen::MatrixXd sigma{{0.2, 0.05}, {0.0, 0.25}};
    for (Measure m : {Measure::VaR, Measure::TVaR, Measure::LEL}) {
        const auto pair = ConstraintPair::absolute(m, 0.3, kParams);
        std::vector<Eigen::VectorXd> inside;
        int nesting_violations = 0;
        for (int i = 0; i < 3000; ++i) {
            const Eigen::VectorXd z = 3.0 * Eigen::VectorXd{{nd(eng), nd(eng)}};
            const bool rich = is_admissible(pair, {mu, sigma, 5.0}, z);
            const bool poor = is_admissible(pair, {mu, sigma, 1.0}, z);
            nesting_violations += rich && !poor;
            if (rich) inside.push_back(z);
        }
        CHECK(nesting_violations == 0);
        REQUIRE(inside.size() > 10);
        int convexity_violations = 0;
        for (std::size_t i = 0; i + 1 < inside.size(); ++i) {
            const Eigen::VectorXd mid = 0.5 * (inside[i] + inside[i + 1]);
            convexity_violations += !is_admissible(pair, {mu, sigma, 5.0}, mid);
        }
        CHECK(convexity_violations == 0);
    }
}

TEST_CASE("g is convex in beta with a single crossing of every level above f(0,0)") {
    for (const auto& pair : builtin_pairs()) {
        CAPTURE(pair.label());
        for (double lambda : {0.1, 0.7, 2.0}) {
            const double step = 1e-2;
            int crossings = 0;
            const double level = pair.f(0.0, 0.0) + 0.05;
            for (int k = 1; k < 1000; ++k) {
                const double b = k * step;
                const double second = g_eval(pair, lambda, b + step) - 2.0 * g_eval(pair, lambda, b) + g_eval(pair, lambda, b - step);
                CHECK(second >= -1e-12);
                crossings += (g_eval(pair, lambda, b - step) - level) * (g_eval(pair, lambda, b) - level) <= 0.0;
            }
            CHECK(crossings == 1);
        }
    }
}
