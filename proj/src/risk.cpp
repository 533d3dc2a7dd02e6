#include "rcg/risk.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <string>

#include "rcg/errors.hpp"
#include "rcg/numerics.hpp"
#include "rcg/rng.hpp"
#include "rcg/simd/kernels.hpp"

namespace rcg {

void RiskParams::validate() const {
    if (!(alpha > 0.0 && alpha < 0.5)) {
        throw DomainError("risk params: alpha must lie in (0, 1/2)");
    }
    if (!(tau > 0.0) || !std::isfinite(tau)) {
        throw DomainError("risk params: tau must be positive");
    }
    if (!(r > 0.0) || !std::isfinite(r)) {
        throw DomainError("risk params: r must be positive");
    }
}

std::string_view to_string(Measure m) noexcept {
    switch (m) {
        case Measure::VaR: return "VaR";
        case Measure::TVaR: return "TVaR";
        case Measure::LEL: return "LEL";
    }
    return "?";
}

Measure measure_from_string(std::string_view name) {
    if (name == "VaR") return Measure::VaR;
    if (name == "TVaR") return Measure::TVaR;
    if (name == "LEL") return Measure::LEL;
    throw DomainError("unknown risk measure '" + std::string(name) + "'");
}

double qtilde(const PortfolioStats& stats, const RiskParams& params) noexcept {
    return params.r + stats.zeta_mu - 0.5 * stats.zeta_sigma * stats.zeta_sigma;
}

namespace {

void require_wealth(double x) {
    if (!(x > 0.0) || !std::isfinite(x)) {
        throw DomainError("wealth must be positive and finite");
    }
}

void require_volatility(double zeta_sigma) {
    if (!(zeta_sigma >= 0.0) || !std::isfinite(zeta_sigma)) {
        throw DomainError("portfolio volatility must be non-negative");
    }
}

double positive_part(double v) { return v > 0.0 ? v : 0.0; }

// Tail factor (1/alpha) N(N^{-1}(alpha) - s sqrt(tau)).
double tail_factor(double zeta_sigma, const RiskParams& params) {
    return norm_cdf(norm_quantile(params.alpha) - zeta_sigma * std::sqrt(params.tau)) /
           params.alpha;
}

}  // namespace

double value_at_risk(double x, const PortfolioStats& stats, const RiskParams& params) {
    require_wealth(x);
    require_volatility(stats.zeta_sigma);
    const double exponent = qtilde(stats, params) * params.tau +
                            norm_quantile(params.alpha) * stats.zeta_sigma * std::sqrt(params.tau);
    return x * positive_part(1.0 - std::exp(exponent));
}

double tail_value_at_risk(double x, const PortfolioStats& stats, const RiskParams& params) {
    require_wealth(x);
    require_volatility(stats.zeta_sigma);
    const double growth = std::exp(params.tau * (params.r + stats.zeta_mu));
    return x * positive_part(1.0 - growth * tail_factor(stats.zeta_sigma, params));
}

double limited_expected_loss(double x, double zeta_sigma, const RiskParams& params) {
    require_wealth(x);
    require_volatility(zeta_sigma);
    const double growth = std::exp(params.r * params.tau);
    return x * positive_part(1.0 - growth * tail_factor(zeta_sigma, params));
}

double absolute_measure(Measure m, double x, const PortfolioStats& stats, const RiskParams& params) {
    switch (m) {
        case Measure::VaR: return value_at_risk(x, stats, params);
        case Measure::TVaR: return tail_value_at_risk(x, stats, params);
        case Measure::LEL: return limited_expected_loss(x, stats.zeta_sigma, params);
    }
    throw DomainError("unknown measure");
}

double relative_measure(Measure m, const PortfolioStats& stats, const RiskParams& params) {
    return absolute_measure(m, 1.0, stats, params);
}

std::vector<double> sample_projected_loss(double x, const PortfolioStats& stats,
                                          const RiskParams& params, std::uint64_t seed,
                                          std::size_t n) {
    require_wealth(x);
    require_volatility(stats.zeta_sigma);
    if (n < 1) {
        throw DomainError("sample_projected_loss: need n >= 1");
    }
    std::vector<double> z(n);
    NormalStream stream(seed);
    stream.fill(z);
    std::vector<double> losses(n);
    simd::active_kernels().projected_loss(z, x, qtilde(stats, params) * params.tau,
                                          stats.zeta_sigma * std::sqrt(params.tau), losses);
    return losses;
}

namespace {

struct BatchTail {
    double quantile;
    double tail_mean;
};

// One batch of antithetic pairs: the empirical upper alpha-percentile and
// the mean of the losses at or above it.
BatchTail batch_tail(NormalStream& stream, std::size_t pairs, double x, double mean, double sd,
                     double alpha, std::vector<double>& z, std::vector<double>& losses) {
    const simd::Kernels& k = simd::active_kernels();
    z.resize(2 * pairs);
    losses.resize(2 * pairs);
    stream.fill(std::span<double>(z.data(), pairs));
    for (std::size_t i = 0; i < pairs; ++i) {
        z[pairs + i] = -z[i];
    }
    k.projected_loss(z, x, mean, sd, losses);
    // P[L >= gamma] = alpha: gamma is the order statistic with a fraction
    // alpha of the sample at or above it.
    const std::size_t n = losses.size();
    const auto above = static_cast<std::size_t>(std::floor(alpha * static_cast<double>(n)));
    const std::size_t index = n - std::max<std::size_t>(above, 1);
    std::nth_element(losses.begin(), losses.begin() + static_cast<std::ptrdiff_t>(index),
                     losses.end());
    const double gamma = losses[index];
    const simd::TailStats tail =
        k.tail_stats(std::span<const double>(losses).subspan(index), gamma);
    return {gamma, tail.sum / static_cast<double>(tail.count)};
}

MonteCarloEstimate summarize(const std::vector<double>& batch_values, std::size_t samples) {
    const simd::SumStats s = simd::scalar_kernels().sum_stats(batch_values);
    const double b = static_cast<double>(batch_values.size());
    const double mean = s.sum / b;
    const double var = std::max(0.0, (s.sum_sq - b * mean * mean) / (b - 1.0));
    return {positive_part(mean), std::sqrt(var / b), samples};
}

}  // namespace

TailOracle tail_oracle(double x, const PortfolioStats& stats, const RiskParams& params,
                       std::uint64_t seed, std::size_t samples, std::size_t batches) {
    require_wealth(x);
    require_volatility(stats.zeta_sigma);
    params.validate();
    if (batches < 2 || samples < 4 * batches) {
        throw DomainError("tail_oracle: need >= 2 batches of >= 4 samples");
    }
    const std::size_t pairs = samples / (2 * batches);
    const double mean = qtilde(stats, params) * params.tau;
    const double sd = stats.zeta_sigma * std::sqrt(params.tau);

    NormalStream stream(seed);
    std::vector<double> z;
    std::vector<double> losses;
    std::vector<double> quantiles(batches);
    std::vector<double> tails(batches);
    for (std::size_t b = 0; b < batches; ++b) {
        const BatchTail bt = batch_tail(stream, pairs, x, mean, sd, params.alpha, z, losses);
        quantiles[b] = bt.quantile;
        tails[b] = bt.tail_mean;
    }
    const std::size_t used = 2 * pairs * batches;
    return {summarize(quantiles, used), summarize(tails, used)};
}

MonteCarloEstimate monte_carlo_measure(Measure m, double x, const PortfolioStats& stats,
                                       const RiskParams& params, std::uint64_t seed,
                                       std::size_t samples, std::size_t batches) {
    PortfolioStats effective = stats;
    if (m == Measure::LEL) {
        effective.zeta_mu = 0.0;
    }
    const std::array<double, 6> key{x, effective.zeta_mu, effective.zeta_sigma, params.alpha,
                                    params.tau, params.r};
    const std::uint64_t stream =
        derive_seed(seed, hash_doubles(key) ^ (static_cast<std::uint64_t>(m) + 1));
    const TailOracle oracle = tail_oracle(x, effective, params, stream, samples, batches);
    return m == Measure::VaR ? oracle.var : oracle.tvar;
}

std::uint64_t hash_doubles(std::span<const double> values) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (double v : values) {
        std::uint64_t bits = 0;
        std::memcpy(&bits, &v, sizeof bits);
        h = mix64(h ^ bits);
    }
    return h;
}

}  // namespace rcg
