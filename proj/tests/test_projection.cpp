#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "rcg/errors.hpp"
#include "rcg/projection.hpp"

using namespace rcg;

namespace {

const RiskParams kParams{.alpha = 0.05, .tau = 10.0 / 252.0, .r = 0.03};

struct TwoAsset {
    Eigen::VectorXd mu{{0.06, 0.04}};
    Eigen::MatrixXd sigma{{0.2, 0.05}, {0.0, 0.25}};
};

double drift(const Eigen::VectorXd& zeta, const Eigen::VectorXd& mu, const Eigen::MatrixXd& sigma, double r) {
    const double s = (sigma.transpose() * zeta).norm();
    return r + zeta.dot(mu) - 0.5 * s * s;
}

}  // namespace

TEST_CASE("Merton proportion in one dimension") {
    const MertonData m = merton_proportion(Eigen::VectorXd::Constant(1, 0.05), Eigen::MatrixXd::Constant(1, 1, 0.2));
    CHECK(m.zeta_m(0) == doctest::Approx(1.25).epsilon(1e-14));
    CHECK(m.lambda == doctest::Approx(0.25).epsilon(1e-14));
}

TEST_CASE("Merton proportion solves sigma sigma' zeta = mu") {
    const TwoAsset a;
    const MertonData m = merton_proportion(a.mu, a.sigma);
    CHECK((a.sigma * a.sigma.transpose() * m.zeta_m - a.mu).norm() <= 1e-14);
    CHECK(m.lambda * m.lambda == doctest::Approx(m.zeta_m.dot(a.mu)).epsilon(1e-13));

    // more Brownian motions than assets
    Eigen::MatrixXd wide(2, 3);
    wide << 0.2, 0.05, 0.1, 0.0, 0.25, -0.1;
    const MertonData w = merton_proportion(a.mu, wide);
    CHECK((wide * wide.transpose() * w.zeta_m - a.mu).norm() <= 1e-14);

    Eigen::MatrixXd singular{{0.2, 0.1}, {0.4, 0.2}};
    CHECK_THROWS_AS(merton_proportion(a.mu, singular), SingularityError);
    CHECK_THROWS_AS(merton_proportion(Eigen::VectorXd::Zero(3), a.sigma), DomainError);
}

TEST_CASE("d_sigma is the portfolio-volatility distance") {
    const TwoAsset a;
    const Eigen::VectorXd z1{{1.0, 0.0}}, z2{{0.0, 1.0}};
    const Eigen::VectorXd diff = a.sigma.transpose() * (z1 - z2);
    CHECK(d_sigma(z1, z2, a.sigma) == doctest::Approx(std::hypot(diff(0), diff(1))));
    CHECK(d_sigma(z1, z1, a.sigma) == 0.0);
}

TEST_CASE("drift identity Q = r + lambda^2/2 - d_sigma^2/2") {
    const TwoAsset a;
    const MertonData m = merton_proportion(a.mu, a.sigma);
    std::mt19937_64 eng(1);
    std::normal_distribution<double> nd;
    for (int i = 0; i < 50; ++i) {
        const Eigen::VectorXd z{{nd(eng), nd(eng)}};
        const double d = d_sigma(z, m.zeta_m, a.sigma);
        CHECK(drift(z, a.mu, a.sigma, 0.03) == doctest::Approx(0.03 + 0.5 * m.lambda * m.lambda - 0.5 * d * d).epsilon(1e-12));
    }
}

TEST_CASE("beta_of edge cases") {
    const auto pair = ConstraintPair::relative(Measure::VaR, 0.01, kParams);
    CHECK(beta_of(pair, 0.5, kInfinity) == 1.0);
    CHECK(beta_of(pair, 0.0, 0.0) == 1.0);
    CHECK(beta_of(pair, 1e-4, pair.h(1.0)) == 1.0);
    const double b = beta_of(pair, 2.0, pair.h(1.0));
    CHECK(b > 0.0);
    CHECK(b < 1.0);
    CHECK(g_eval(pair, 2.0, b) <= pair.h(1.0));
    CHECK(g_eval(pair, 2.0, b) == doctest::Approx(pair.h(1.0)).epsilon(1e-10));
    CHECK_THROWS_AS(beta_of(pair, -1.0, 0.1), DomainError);
}

TEST_CASE("delta_star decreases in wealth towards delta") {
    const auto pair = ConstraintPair::absolute(Measure::TVaR, 0.5, kParams);
    for (double lambda : {0.1, 0.5, 1.5}) {
        CAPTURE(lambda);
        double prev = 1.0;
        for (double x : {0.4, 0.6, 1.0, 10.0, 1e3, 1e6}) {
            const double d = delta_star(pair, lambda, x);
            CHECK(d <= prev + 1e-15);
            CHECK(d >= delta(pair, lambda) - 1e-15);
            prev = d;
        }
        CHECK(delta_star(pair, lambda, 1e12) == doctest::Approx(delta(pair, lambda)).epsilon(1e-8));
    }
}

TEST_CASE("delta is nonincreasing in lambda") {
    for (Measure m : {Measure::VaR, Measure::TVaR, Measure::LEL}) {
        const auto pair = ConstraintPair::absolute(m, 0.1, kParams);
        double prev = 1.0;
        for (double lambda = 0.05; lambda <= 3.0; lambda += 0.05) {
            const double d = delta(pair, lambda);
            CHECK(d <= prev + 1e-12);
            prev = d;
        }
    }
}

TEST_CASE("projection lands on the boundary and agrees with the oracle") {
    const TwoAsset a;
    for (Measure m : {Measure::VaR, Measure::TVaR, Measure::LEL}) {
        const auto pair = ConstraintPair::relative(m, 0.005, kParams);
        CAPTURE(pair.label());
        const ConstraintSetQuery q{a.mu, a.sigma, 1.0};
        const ProjectionResult p = project_merton(pair, q);
        REQUIRE(p.binding);
        const PortfolioStats s = portfolio_stats(p.zeta_proj, a.mu, a.sigma);
        CHECK(std::abs(pair.f(s) - pair.h(1.0)) <= 1e-9);

        const Eigen::VectorXd o = oracle_project(pair, q);
        CHECK(d_sigma(o, p.zeta_proj, a.sigma) <= 1e-5 * (a.sigma.transpose() * p.zeta_proj).norm());
    }
}

TEST_CASE("one-asset oracle") {
    const auto pair = ConstraintPair::absolute(Measure::VaR, 0.02, kParams);
    const ConstraintSetQuery q{Eigen::VectorXd::Constant(1, 0.3), Eigen::MatrixXd::Constant(1, 1, 0.3), 1.0};
    const ProjectionResult p = project_merton(pair, q);
    REQUIRE(p.binding);
    CHECK(oracle_project(pair, q)(0) == doctest::Approx(p.zeta_proj(0)).epsilon(1e-6));
    const ConstraintSetQuery below{q.mu, q.sigma, 0.01};
    CHECK_THROWS_AS(oracle_project(pair, below), DomainError);
}

TEST_CASE("projection inequality d(z, zM)^2 >= d(z, zP)^2 + d(zP, zM)^2 on the admissible set") {
    const TwoAsset a;
    const auto pair = ConstraintPair::relative(Measure::TVaR, 0.01, kParams);
    const ConstraintSetQuery q{a.mu, a.sigma, 1.0};
    const MertonData m = merton_proportion(a.mu, a.sigma);
    const ProjectionResult p = project_merton(pair, q);
    std::mt19937_64 eng(5);
    std::normal_distribution<double> nd;
    int tested = 0;
    for (int i = 0; i < 20000; ++i) {
        const Eigen::VectorXd z = p.zeta_proj + 0.2 * Eigen::VectorXd{{nd(eng), nd(eng)}};
        if (!is_admissible(pair, q, z)) continue;
        ++tested;
        const double dzm = d_sigma(z, m.zeta_m, a.sigma);
        const double dzp = d_sigma(z, p.zeta_proj, a.sigma);
        const double dpm = d_sigma(p.zeta_proj, m.zeta_m, a.sigma);
        CHECK(dzm * dzm >= dzp * dzp + dpm * dpm - 1e-8);
        // no admissible portfolio has a higher drift than the projection
        CHECK(drift(z, a.mu, a.sigma, 0.03) <= drift(p.zeta_proj, a.mu, a.sigma, 0.03) + 1e-12);
    }
    CHECK(tested >= 1000);
}

TEST_CASE("beta is Lipschitz in log-wealth") {
    const auto pair = ConstraintPair::absolute(Measure::VaR, 1.0, kParams);
    const std::vector<double> lambdas{0.2, 0.6, 1.2};
    std::vector<std::pair<double, double>> ys;
    for (double y = 0.05; y < 6.0; y += 0.25) {
        ys.emplace_back(y, y + 1e-5);
        ys.emplace_back(y, y + 0.5);
    }
    const LipschitzReport r = lipschitz_report(pair, lambdas, ys);
    CHECK(r.pairs == lambdas.size() * ys.size());
    CHECK(std::isfinite(r.max_ratio));
    CHECK(r.max_ratio > 0.0);
    CHECK_FALSE(r.blowup);
    const std::vector<std::pair<double, double>> bad{{-1.0, 0.5}};
    CHECK_THROWS_AS(lipschitz_report(pair, lambdas, bad), DomainError);
}

TEST_CASE("beta = 1 exactly when the Merton proportion is admissible") {
    const TwoAsset a;
    const MertonData m = merton_proportion(a.mu, a.sigma);
    for (Measure meas : {Measure::VaR, Measure::TVaR, Measure::LEL}) {
        const auto pair = ConstraintPair::absolute(meas, 0.05, kParams);
        for (double x : {0.06, 0.2, 0.5, 1.0, 3.0, 100.0}) {
            const ConstraintSetQuery q{a.mu, a.sigma, x};
            const ProjectionResult p = project_merton(pair, q);
            CAPTURE(x);
            CHECK((p.beta == 1.0) == is_admissible(pair, q, m.zeta_m));
            CHECK(p.binding == (p.beta < 1.0));
        }
    }
}

TEST_CASE("Cauchy-Schwarz: zeta' mu <= |zeta' sigma| lambda") {
    const TwoAsset a;
    const MertonData m = merton_proportion(a.mu, a.sigma);
    std::mt19937_64 eng(9);
    std::normal_distribution<double> nd;
    for (int i = 0; i < 1000; ++i) {
        const Eigen::VectorXd z{{nd(eng), nd(eng)}};
        CHECK(z.dot(a.mu) <= (a.sigma.transpose() * z).norm() * m.lambda + 1e-14);
    }
}
