#include <doctest.h>

#include <cmath>
#include <random>

#include "rcg/errors.hpp"
#include "rcg/numerics.hpp"
#include "rcg/risk.hpp"

using namespace rcg;

namespace {

// (1/alpha) * integral of the loss over the lower alpha-tail of the driving normal,
// by composite Simpson on [-12, z_alpha].
double tail_mean_oracle(double x, const PortfolioStats& s, const RiskParams& p) {
    const double za = norm_quantile(p.alpha);
    const double lo = -12.0;
    const int n = 20000;
    const double hstep = (za - lo) / n;
    auto integrand = [&](double z) {
        const double loss = x * (1.0 - std::exp(qtilde(s, p) * p.tau + s.zeta_sigma * std::sqrt(p.tau) * z));
        return loss * norm_pdf(z);
    };
    double acc = integrand(lo) + integrand(za);
    for (int i = 1; i < n; ++i) acc += integrand(lo + i * hstep) * (i % 2 == 1 ? 4.0 : 2.0);
    return acc * hstep / 3.0 / p.alpha;
}

}  // namespace

TEST_CASE("zero volatility carries only the riskless drift") {
    const RiskParams p;
    const PortfolioStats s{.zeta_mu = 0.0, .zeta_sigma = 0.0};
    CHECK(value_at_risk(5.0, s, p) == 0.0);
    CHECK(tail_value_at_risk(5.0, s, p) == 0.0);
    CHECK(limited_expected_loss(5.0, 0.0, p) == 0.0);
}

TEST_CASE("VaR is the alpha-quantile of the projected loss") {
    const RiskParams p{.alpha = 0.05, .tau = 0.25, .r = 0.02};
    const PortfolioStats s{.zeta_mu = 0.03, .zeta_sigma = 0.4};
    const double y = qtilde(s, p) * p.tau + s.zeta_sigma * std::sqrt(p.tau) * norm_quantile(p.alpha);
    CHECK(value_at_risk(2.0, s, p) == doctest::Approx(2.0 * (1.0 - std::exp(y))).epsilon(1e-14));
}

TEST_CASE("TVaR matches the tail integral") {
    const RiskParams p{.alpha = 0.01, .tau = 0.5, .r = 0.03};
    for (double sig : {0.1, 0.5, 1.5}) {
        const PortfolioStats s{.zeta_mu = 0.1, .zeta_sigma = sig};
        CAPTURE(sig);
        CHECK(tail_value_at_risk(3.0, s, p) == doctest::Approx(tail_mean_oracle(3.0, s, p)).epsilon(1e-9));
        CHECK(tail_value_at_risk(3.0, s, p) >= value_at_risk(3.0, s, p));
    }
}

TEST_CASE("relative measures are absolute measures per unit wealth") {
    const RiskParams p;
    const PortfolioStats s{.zeta_mu = 0.08, .zeta_sigma = 0.35};
    for (Measure m : {Measure::VaR, Measure::TVaR, Measure::LEL}) {
        for (double x : {0.5, 1.0, 1234.5}) {
            CHECK(absolute_measure(m, x, s, p) / x == doctest::Approx(relative_measure(m, s, p)).epsilon(1e-14));
        }
    }
}

TEST_CASE("LEL ignores the portfolio drift and equals TVaR at zero excess return") {
    const RiskParams p;
    const PortfolioStats a{.zeta_mu = 0.0, .zeta_sigma = 0.3};
    const PortfolioStats b{.zeta_mu = 0.5, .zeta_sigma = 0.3};
    CHECK(absolute_measure(Measure::LEL, 1.0, a, p) == absolute_measure(Measure::LEL, 1.0, b, p));
    CHECK(limited_expected_loss(1.0, 0.3, p) == doctest::Approx(tail_value_at_risk(1.0, a, p)).epsilon(1e-14));
}

TEST_CASE("Monte Carlo estimates agree with the closed forms") {
    const RiskParams p{.alpha = 0.05, .tau = 0.1, .r = 0.03};
    const PortfolioStats s{.zeta_mu = 0.05, .zeta_sigma = 0.6};
    const TailOracle o = tail_oracle(1.0, s, p, 42, 400000);
    CHECK(std::abs(o.var.value - value_at_risk(1.0, s, p)) <= 5.0 * o.var.std_error);
    CHECK(std::abs(o.tvar.value - tail_value_at_risk(1.0, s, p)) <= 5.0 * o.tvar.std_error);
    for (Measure m : {Measure::VaR, Measure::TVaR, Measure::LEL}) {
        const MonteCarloEstimate e = monte_carlo_measure(m, 1.0, s, p, 9, 400000);
        CHECK(std::abs(e.value - absolute_measure(m, 1.0, s, p)) <= 5.0 * e.std_error);
    }
}

TEST_CASE("measure names and parameter validation") {
    CHECK(measure_from_string("VaR") == Measure::VaR);
    CHECK(measure_from_string("TVaR") == Measure::TVaR);
    CHECK(measure_from_string("LEL") == Measure::LEL);
    CHECK(to_string(Measure::TVaR) == "TVaR");
    CHECK_THROWS_AS(measure_from_string("CVaR"), DomainError);

    CHECK_THROWS_AS((RiskParams{.alpha = 0.5}).validate(), DomainError);
    CHECK_THROWS_AS((RiskParams{.tau = 0.0}).validate(), DomainError);
    CHECK_THROWS_AS((RiskParams{.r = 0.0}).validate(), DomainError);
    CHECK_THROWS_AS(value_at_risk(0.0, {}, RiskParams{}), DomainError);
    CHECK_THROWS_AS(value_at_risk(1.0, {.zeta_mu = 0.0, .zeta_sigma = -0.1}, RiskParams{}), DomainError);
}

TEST_CASE("homogeneity, monotonicity and TVaR >= VaR") {
    std::mt19937_64 eng(21);
    std::uniform_real_distribution<double> alpha(0.005, 0.45), tau(10.0 / 252.0, 1.0), rate(0.001, 0.1),
        zmu(-0.5, 1.0), zsig(0.0, 3.0), scale(0.01, 100.0);
    for (int i = 0; i < 300; ++i) {
        const RiskParams p{.alpha = alpha(eng), .tau = tau(eng), .r = rate(eng)};
        const PortfolioStats s{.zeta_mu = zmu(eng), .zeta_sigma = zsig(eng)};
        const double c = scale(eng);
        for (Measure m : {Measure::VaR, Measure::TVaR, Measure::LEL}) {
            CHECK(absolute_measure(m, c * 2.0, s, p) == doctest::Approx(c * absolute_measure(m, 2.0, s, p)).epsilon(1e-13));
        }
        CHECK(tail_value_at_risk(1.0, s, p) >= value_at_risk(1.0, s, p) - 1e-15);
    }
    const RiskParams p;
    for (double zm : {-0.2, 0.0, 0.3}) {
        for (Measure m : {Measure::VaR, Measure::TVaR, Measure::LEL}) {
            double prev = 0.0;
            for (int k = 0; k <= 300; ++k) {
                const double v = absolute_measure(m, 1.0, {.zeta_mu = zm, .zeta_sigma = 0.01 * k}, p);
                CHECK(v >= prev - 1e-15);
                prev = v;
            }
        }
    }
    for (double zs : {0.1, 1.0, 2.5}) {
        for (Measure m : {Measure::VaR, Measure::TVaR}) {
            double prev = 1.0;
            for (int k = 0; k <= 200; ++k) {
                const double v = absolute_measure(m, 1.0, {.zeta_mu = -1.0 + 0.01 * k, .zeta_sigma = zs}, p);
                CHECK(v <= prev + 1e-15);
                prev = v;
            }
        }
    }
}
