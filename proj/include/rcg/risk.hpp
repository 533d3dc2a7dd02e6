#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>
#include <vector>

namespace rcg {

/// Global parameters of every risk measure: percentile alpha, measurement
/// horizon tau (years) and riskless rate r (per year).
struct RiskParams {
    double alpha = 0.05;
    double tau = 10.0 / 252.0;
    double r = 0.03;

    /// Throws DomainError unless alpha in (0, 1/2), tau > 0, r > 0.
    void validate() const;
};

/// Portfolio rate of return zeta' mu and volatility |zeta' sigma|.
struct PortfolioStats {
    double zeta_mu = 0.0;
    double zeta_sigma = 0.0;
};

enum class Measure { VaR, TVaR, LEL };

std::string_view to_string(Measure m) noexcept;
Measure measure_from_string(std::string_view name);

/// r + zeta_mu - zeta_sigma^2 / 2
double qtilde(const PortfolioStats& stats, const RiskParams& params) noexcept;

double value_at_risk(double x, const PortfolioStats& stats, const RiskParams& params);
double tail_value_at_risk(double x, const PortfolioStats& stats, const RiskParams& params);
double limited_expected_loss(double x, double zeta_sigma, const RiskParams& params);

/// Dispatches to one of the three absolute measures (LEL ignores zeta_mu).
double absolute_measure(Measure m, double x, const PortfolioStats& stats, const RiskParams& params);

/// Measure per unit of wealth; independent of the wealth level.
double relative_measure(Measure m, const PortfolioStats& stats, const RiskParams& params);

/// n i.i.d. draws of the projected loss x (1 - exp(Y)), Y ~ N(Qtilde tau, zeta_sigma^2 tau).
std::vector<double> sample_projected_loss(double x, const PortfolioStats& stats,
                                          const RiskParams& params, std::uint64_t seed,
                                          std::size_t n);

struct MonteCarloEstimate {
    double value = 0.0;
    double std_error = 0.0;
    std::size_t samples = 0;
};

/// Empirical upper alpha-percentile (VaR) and conditional tail mean (TVaR) of
/// the projected loss, positive parts applied. Antithetic normal pairs; the
/// standard error comes from batch means over `batches` equal batches.
struct TailOracle {
    MonteCarloEstimate var;
    MonteCarloEstimate tvar;
};

TailOracle tail_oracle(double x, const PortfolioStats& stats, const RiskParams& params,
                       std::uint64_t seed, std::size_t samples, std::size_t batches = 50);

/// Monte Carlo counterpart of absolute_measure(m, ...). The stream seed is
/// derived from (seed, measure, parameters).
MonteCarloEstimate monte_carlo_measure(Measure m, double x, const PortfolioStats& stats,
                                       const RiskParams& params, std::uint64_t seed,
                                       std::size_t samples, std::size_t batches = 50);

}  // namespace rcg
