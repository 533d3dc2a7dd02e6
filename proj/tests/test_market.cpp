#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "rcg/errors.hpp"
#include "rcg/market.hpp"
#include "rcg/numerics.hpp"
#include "rcg/rng.hpp"

using namespace rcg;

namespace {

MarketModel constant_market() {
    return MarketModel::constant({0.03, Eigen::VectorXd::Constant(1, 0.05), Eigen::MatrixXd::Constant(1, 1, 0.2)});
}

// E[phi(V)] for V ~ N(m, var) by the trapezoid rule over +-10 sd.
template <class F>
double normal_expectation(F phi, double m, double var) {
    const double sd = std::sqrt(var);
    const int n = 20000;
    const double h = 20.0 * sd / n;
    double acc = 0.0;
    for (int i = 0; i <= n; ++i) {
        const double v = m - 10.0 * sd + i * h;
        const double w = (i == 0 || i == n) ? 0.5 : 1.0;
        acc += w * phi(v) * norm_pdf((v - m) / sd) / sd;
    }
    return acc * h;
}

}  // namespace

TEST_CASE("constant market") {
    const MarketModel m = constant_market();
    CHECK(m.kind_name() == "constant");
    CHECK(m.n_assets() == 1);
    CHECK(m.merton_at(7.0, 0.0).lambda == doctest::Approx(0.25));
    CHECK(m.coefficients_at(3.0, 1.0).r == 0.03);
    CHECK(z_quadrature(m, [](double l) { return l * l; }).value == doctest::Approx(0.0625));
    const ErgodicValue ta = z_time_average(m, [](double l) { return l * l; }, 10.0, 0.1, 1);
    CHECK(ta.value == doctest::Approx(0.0625));
    CHECK(ta.error_estimate == 0.0);
    CHECK(mean_rate(m) == 0.03);
    CHECK_THROWS_AS(m.ou_step(0.0, 0.1, 0.0), DomainError);
}

TEST_CASE("market point validation") {
    MarketPoint p{0.03, Eigen::VectorXd::Constant(2, 0.05), Eigen::MatrixXd::Constant(1, 1, 0.2)};
    CHECK_THROWS_AS(p.validate(), DomainError);
    p.sigma = Eigen::MatrixXd::Constant(2, 2, NAN);
    CHECK_THROWS_AS(p.validate(), DomainError);
}

TEST_CASE("OU model: closed-form lambda matches the generic Merton solve") {
    const OUParams params{.r = 0.03, .mu = 0.05, .nu = 4.0, .vbar = 0.5, .rho = -0.5, .v0 = 0.5};
    const MarketModel m = MarketModel::ou_stoch_vol(params);
    CHECK(m.n_brownians() == 2);
    for (double v : {-2.0, 0.0, 0.5, 1.7}) {
        const MarketPoint p = m.coefficients_at(0.0, v);
        const MertonData generic = merton_proportion(p.mu, p.sigma);
        const MertonData closed = m.merton_at(0.0, v);
        CHECK(closed.lambda == doctest::Approx(generic.lambda).epsilon(1e-13));
        CHECK(closed.zeta_m(0) == doctest::Approx(generic.zeta_m(0)).epsilon(1e-13));
        CHECK(m.vol(v) > 0.1);
        CHECK(m.vol(v) < 0.6);
    }
}

TEST_CASE("OU model with a flat vol map degenerates to a constant market") {
    const OUParams params{.nu = 2.0, .rho = 0.3};
    const MarketModel m = MarketModel::ou_stoch_vol(params, LogisticVolMap{0.2, 0.2});
    const double lambda = 0.05 / 0.2;
    CHECK(m.merton_at(0.0, -3.0).lambda == doctest::Approx(lambda).epsilon(1e-14));
    CHECK(z_quadrature(m, [](double l) { return l * l; }).value == doctest::Approx(lambda * lambda).epsilon(1e-13));
}

TEST_CASE("OU transition") {
    const MarketModel m = MarketModel::ou_stoch_vol(OUParams{.nu = 4.0, .vbar = 0.5});
    CHECK(m.ou_step(0.5, 0.01, 0.0) == 0.5);
    CHECK(m.ou_step(1.5, 0.01, 0.0) == doctest::Approx(0.5 + std::exp(-0.04)));
    // Over a long step the transition forgets v and samples the invariant law N(vbar, 1/(2 nu)).
    NormalStream stream(123);
    const int n = 20000;
    std::vector<double> draws(n);
    for (double& d : draws) d = m.ou_step(-7.0, 10.0, stream());
    std::sort(draws.begin(), draws.end());
    const double sd = std::sqrt(1.0 / 8.0);
    double ks = 0.0;
    for (int i = 0; i < n; ++i) {
        const double cdf = norm_cdf((draws[i] - 0.5) / sd);
        ks = std::max({ks, std::abs(cdf - double(i) / n), std::abs(cdf - double(i + 1) / n)});
    }
    // 0.1% critical value of the Kolmogorov-Smirnov statistic
    CHECK(ks < 1.95 / std::sqrt(double(n)));
    CHECK_THROWS_AS(m.ou_step(0.0, 0.0, 0.0), DomainError);
}

TEST_CASE("OU stationary variance") {
    const MarketModel m = MarketModel::ou_stoch_vol(OUParams{.nu = 4.0, .vbar = 0.5, .v0 = 0.5});
    const StationaryVarianceCheck c = ou_stationary_variance(m, 4000.0, 0.01, 3);
    CHECK(c.target == doctest::Approx(0.125));
    CHECK(std::abs(c.variance - c.target) <= 4.0 * c.std_error);
}

TEST_CASE("ergodic averages") {
    const MarketModel ou = MarketModel::ou_stoch_vol(OUParams{.nu = 4.0, .vbar = 0.5, .rho = -0.5});
    CHECK(z_quadrature(ou, [](double) { return 1.0; }).value == doctest::Approx(1.0).epsilon(1e-13));

    const LogisticVolMap map;
    const double oracle = normal_expectation([&](double v) { double l = 0.05 / map(v); return l * l; }, 0.5, 1.0 / 8.0);
    CHECK(z_quadrature(ou, [](double l) { return l * l; }).value == doctest::Approx(oracle).epsilon(1e-9));

    const ErgodicValue ta = z_time_average(ou, [](double l) { return l * l; }, 3000.0, 0.01, 11);
    CHECK(std::abs(ta.value - oracle) <= 4.0 * ta.error_estimate);

    // (1/2pi) integral of (1 + a sin)^-2 over a period = (1 - a^2)^-3/2
    const double a = 0.4;
    const MarketModel periodic = periodic_vol_market(0.03, 0.05, 0.2, a, 1.0);
    const double exact = 0.0625 / std::pow(1.0 - a * a, 1.5);
    CHECK(z_quadrature(periodic, [](double l) { return l * l; }, 64).value == doctest::Approx(exact).epsilon(1e-10));
    CHECK(z_time_average(periodic, [](double l) { return l * l; }, 50.0, 0.001, 1).value ==
          doctest::Approx(exact).epsilon(1e-8));
    CHECK(mean_rate(periodic) == doctest::Approx(0.03));
    CHECK_THROWS_AS(periodic_vol_market(0.03, 0.05, 0.2, 1.0, 1.0), DomainError);
}

TEST_CASE("OU one-step marginal preserves the invariant law") {
    const MarketModel m = MarketModel::ou_stoch_vol(OUParams{.nu = 4.0, .vbar = 0.5});
    const double sd = std::sqrt(1.0 / 8.0);
    NormalStream stream(321);
    const int n = 100000;
    std::vector<double> draws(n);
    for (double& d : draws) d = m.ou_step(0.5 + sd * stream(), 0.01, stream());
    std::sort(draws.begin(), draws.end());
    double ks = 0.0;
    for (int i = 0; i < n; ++i) {
        const double cdf = norm_cdf((draws[i] - 0.5) / sd);
        ks = std::max({ks, std::abs(cdf - double(i) / n), std::abs(cdf - double(i + 1) / n)});
    }
    CHECK(ks < 1.95 / std::sqrt(double(n)));
}

TEST_CASE("time-average error halves when the horizon quadruples") {
    const MarketModel ou = MarketModel::ou_stoch_vol(OUParams{.nu = 4.0, .vbar = 0.5, .rho = -0.5});
    const auto phi = [](double l) { return l * l; };
    // spread of the time average over independent seeds, horizon T and 4T
    auto spread = [&](double horizon) {
        std::vector<double> v;
        for (std::uint64_t seed = 1; seed <= 40; ++seed) v.push_back(z_time_average(ou, phi, horizon, 0.01, seed).value);
        double mean = 0.0, var = 0.0;
        for (double x : v) mean += x / v.size();
        for (double x : v) var += (x - mean) * (x - mean) / (v.size() - 1);
        return std::sqrt(var);
    };
    const double ratio = spread(400.0) / spread(100.0);
    CHECK(ratio > 0.3);
    CHECK(ratio < 0.75);
}

TEST_CASE("lambda stays within [mu / vol_hi, mu / vol_lo]") {
    const MarketModel m = MarketModel::ou_stoch_vol(OUParams{.nu = 0.5, .vbar = 0.0, .v0 = 4.0});
    NormalStream stream(8);
    double v = m.ou().v0;
    for (int k = 0; k < 100000; ++k) {
        const double lambda = m.merton_at(0.0, v).lambda;
        CHECK(lambda >= 0.05 / 0.6);
        CHECK(lambda <= 0.05 / 0.1);
        v = m.ou_step(v, 0.05, 3.0 * stream());
    }
}
