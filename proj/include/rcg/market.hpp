#pragma once

#include <cstdint>
#include <functional>
#include <string_view>

#include <Eigen/Core>

#include "rcg/projection.hpp"

namespace rcg {

/// Market coefficients at one instant: riskless rate r, excess rates
/// mu = alpha - r (n assets) and volatility matrix sigma (n x m).
struct MarketPoint {
    double r = 0.0;
    Eigen::VectorXd mu;
    Eigen::MatrixXd sigma;

    /// Throws DomainError on non-finite entries or mismatched shapes.
    void validate() const;
};

/// Sigma_lo + (Sigma_hi - Sigma_lo) / (1 + exp(-v))
struct LogisticVolMap {
    double lo = 0.1;
    double hi = 0.6;
    double operator()(double v) const noexcept;
};

/// One risky asset driven by two Brownian motions, with volatility Sigma(V)
/// of an Ornstein-Uhlenbeck state dV = -nu (V - vbar) dt + dW_2:
///   sigma = [rho Sigma(V), sqrt(1 - rho^2) Sigma(V)].
/// The state's invariant law is N(vbar, 1/(2 nu)).
struct OUParams {
    double r = 0.03;
    double mu = 0.05;
    double nu = 4.0;
    double vbar = 0.5;
    double rho = 0.0;
    double v0 = 0.5;
};

class MarketModel {
public:
    enum class Kind { Constant, Periodic, OUStochVol };
    using PeriodicFn = std::function<MarketPoint(double phase)>;
    using VolMap = std::function<double(double)>;

    static MarketModel constant(MarketPoint point);

    /// Coefficients depend on t only through the phase t mod period.
    static MarketModel periodic(double period, PeriodicFn fn);

    /// The vol map must stay within [vol_lo, vol_hi], 0 < vol_lo <= vol_hi;
    /// this is spot-checked on a grid around vbar.
    static MarketModel ou_stoch_vol(const OUParams& params, VolMap vol_map, double vol_lo,
                                    double vol_hi);
    static MarketModel ou_stoch_vol(const OUParams& params, LogisticVolMap vol_map = {});

    Kind kind() const noexcept { return kind_; }
    std::string_view kind_name() const noexcept;
    Eigen::Index n_assets() const noexcept { return n_; }
    Eigen::Index n_brownians() const noexcept { return m_; }
    double period() const noexcept { return period_; }
    const OUParams& ou() const noexcept { return ou_; }
    double vol_lo() const noexcept { return vol_lo_; }
    double vol_hi() const noexcept { return vol_hi_; }

    /// Initial value of the model's state variable (the OU level; 0 otherwise).
    double initial_state() const noexcept { return kind_ == Kind::OUStochVol ? ou_.v0 : 0.0; }

    MarketPoint coefficients_at(double t, double state) const;

    /// Merton proportion and lambda at (t, state). Closed form for the OU model.
    MertonData merton_at(double t, double state) const;

    /// Sigma(v); OU model only.
    double vol(double v) const;

    /// Exact OU transition over dt driven by a standard normal draw.
    double ou_step(double v, double dt, double noise) const;

private:
    MarketModel() = default;

    Kind kind_ = Kind::Constant;
    Eigen::Index n_ = 1;
    Eigen::Index m_ = 1;
    MarketPoint point_;
    MertonData merton_;
    double period_ = 0.0;
    PeriodicFn periodic_;
    OUParams ou_;
    VolMap vol_map_;
    double vol_lo_ = 0.0;
    double vol_hi_ = 0.0;
};

/// Convenience periodic model with one asset and one Brownian motion:
/// sigma(t) = sigma_mean (1 + amplitude sin(2 pi t / period)), |amplitude| < 1.
MarketModel periodic_vol_market(double r, double mu, double sigma_mean, double amplitude,
                                double period);

enum class ErgodicMethod { Quadrature, TimeAverage };

struct ErgodicValue {
    double value = 0.0;
    ErgodicMethod method = ErgodicMethod::Quadrature;
    double error_estimate = 0.0;
};

/// Z(phi): long-run average of phi(lambda). Constant: phi(lambda). Periodic:
/// trapezoid rule over one period with `nodes` panels. OU: Gauss-Hermite
/// with `nodes` nodes over the invariant law of the state.
ErgodicValue z_quadrature(const MarketModel& model, const std::function<double(double)>& phi,
                          int nodes = 50);

/// (1/T) sum_k phi(lambda(t_k, V_k)) dt along one simulated state path.
/// error_estimate is the batch-means standard error (zero for a constant model).
ErgodicValue z_time_average(const MarketModel& model, const std::function<double(double)>& phi,
                            double horizon, double dt, std::uint64_t seed,
                            std::size_t batches = 50);

/// Long-run average riskless rate: r for constant and OU models, the period
/// average for periodic ones.
double mean_rate(const MarketModel& model, int nodes = 512);

struct StationaryVarianceCheck {
    double variance = 0.0;
    double std_error = 0.0;
    double target = 0.0;  // 1/(2 nu)
    std::size_t steps = 0;
};

/// Empirical variance of the OU state around vbar along one exact path,
/// with a batch-means standard error.
StationaryVarianceCheck ou_stationary_variance(const MarketModel& model, double horizon,
                                               double dt, std::uint64_t seed,
                                               std::size_t batches = 50);

}  // namespace rcg
