#include "rcg/market.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "rcg/errors.hpp"
#include "rcg/numerics.hpp"
#include "rcg/rng.hpp"

namespace rcg {

void MarketPoint::validate() const {
    if (mu.size() == 0 || sigma.rows() != mu.size() || sigma.cols() < sigma.rows()) {
        throw DomainError("market point: sigma must be n x m with n = dim(mu) <= m");
    }
    if (!std::isfinite(r) || !mu.allFinite() || !sigma.allFinite()) {
        throw DomainError("market point: non-finite coefficient");
    }
}

double LogisticVolMap::operator()(double v) const noexcept {
    return lo + (hi - lo) / (1.0 + std::exp(-v));
}

MarketModel MarketModel::constant(MarketPoint point) {
    point.validate();
    MarketModel model;
    model.kind_ = Kind::Constant;
    model.n_ = point.mu.size();
    model.m_ = point.sigma.cols();
    model.merton_ = merton_proportion(point.mu, point.sigma);
    model.point_ = std::move(point);
    return model;
}

MarketModel MarketModel::periodic(double period, PeriodicFn fn) {
    if (!(period > 0.0) || !std::isfinite(period)) {
        throw DomainError("periodic market: period must be positive");
    }
    if (!fn) {
        throw DomainError("periodic market: missing coefficient function");
    }
    const MarketPoint first = fn(0.0);
    first.validate();
    MarketModel model;
    model.kind_ = Kind::Periodic;
    model.n_ = first.mu.size();
    model.m_ = first.sigma.cols();
    model.period_ = period;
    model.periodic_ = std::move(fn);
    return model;
}

MarketModel MarketModel::ou_stoch_vol(const OUParams& params, VolMap vol_map, double vol_lo,
                                      double vol_hi) {
    if (!(params.nu > 0.0) || !std::isfinite(params.nu)) {
        throw DomainError("OU market: nu must be positive");
    }
    if (!(params.rho >= -1.0 && params.rho <= 1.0)) {
        throw DomainError("OU market: rho must lie in [-1, 1]");
    }
    if (!std::isfinite(params.r) || !std::isfinite(params.mu) || !std::isfinite(params.vbar) ||
        !std::isfinite(params.v0)) {
        throw DomainError("OU market: non-finite parameter");
    }
    if (!(vol_lo > 0.0 && vol_lo <= vol_hi) || !std::isfinite(vol_hi)) {
        throw DomainError("OU market: need 0 < vol_lo <= vol_hi");
    }
    if (!vol_map) {
        throw DomainError("OU market: missing vol map");
    }
    const double spread = 10.0 / std::sqrt(2.0 * params.nu);
    for (int i = 0; i <= 200; ++i) {
        const double v = params.vbar - spread + 2.0 * spread * i / 200.0;
        const double s = vol_map(v);
        if (!(s >= vol_lo && s <= vol_hi)) {
            throw DomainError("OU market: vol map leaves [vol_lo, vol_hi] at v = " +
                              std::to_string(v));
        }
    }
    MarketModel model;
    model.kind_ = Kind::OUStochVol;
    model.n_ = 1;
    model.m_ = 2;
    model.ou_ = params;
    model.vol_map_ = std::move(vol_map);
    model.vol_lo_ = vol_lo;
    model.vol_hi_ = vol_hi;
    return model;
}

MarketModel MarketModel::ou_stoch_vol(const OUParams& params, LogisticVolMap vol_map) {
    if (!(vol_map.lo > 0.0 && vol_map.lo <= vol_map.hi)) {
        throw DomainError("OU market: logistic vol map needs 0 < lo <= hi");
    }
    return ou_stoch_vol(params, VolMap(vol_map), vol_map.lo, vol_map.hi);
}

std::string_view MarketModel::kind_name() const noexcept {
    switch (kind_) {
        case Kind::Constant: return "constant";
        case Kind::Periodic: return "periodic";
        case Kind::OUStochVol: return "ou";
    }
    return "unknown";
}

double MarketModel::vol(double v) const {
    if (kind_ != Kind::OUStochVol) {
        throw DomainError("vol: model has no volatility state");
    }
    return vol_map_(v);
}

MarketPoint MarketModel::coefficients_at(double t, double state) const {
    switch (kind_) {
        case Kind::Constant:
            return point_;
        case Kind::Periodic: {
            const double phase = t - period_ * std::floor(t / period_);
            return periodic_(phase);
        }
        case Kind::OUStochVol: {
            const double s = vol_map_(state);
            MarketPoint p;
            p.r = ou_.r;
            p.mu = Eigen::VectorXd::Constant(1, ou_.mu);
            p.sigma.resize(1, 2);
            p.sigma << ou_.rho * s, std::sqrt(std::max(0.0, 1.0 - ou_.rho * ou_.rho)) * s;
            return p;
        }
    }
    throw DomainError("coefficients_at: unknown model kind");
}

MertonData MarketModel::merton_at(double t, double state) const {
    switch (kind_) {
        case Kind::Constant:
            return merton_;
        case Kind::Periodic: {
            const MarketPoint p = coefficients_at(t, state);
            return merton_proportion(p.mu, p.sigma);
        }
        case Kind::OUStochVol: {
            const double s = vol_map_(state);
            return {Eigen::VectorXd::Constant(1, ou_.mu / (s * s)), std::fabs(ou_.mu) / s};
        }
    }
    throw DomainError("merton_at: unknown model kind");
}

double MarketModel::ou_step(double v, double dt, double noise) const {
    if (kind_ != Kind::OUStochVol) {
        throw DomainError("ou_step: model has no OU state");
    }
    if (!(dt > 0.0)) {
        throw DomainError("ou_step: dt must be positive");
    }
    const double decay = std::exp(-ou_.nu * dt);
    const double scale = std::sqrt(-std::expm1(-2.0 * ou_.nu * dt) / (2.0 * ou_.nu));
    return ou_.vbar + (v - ou_.vbar) * decay + scale * noise;
}

MarketModel periodic_vol_market(double r, double mu, double sigma_mean, double amplitude,
                                double period) {
    if (!(sigma_mean > 0.0) || !(std::fabs(amplitude) < 1.0)) {
        throw DomainError("periodic_vol_market: need sigma_mean > 0 and |amplitude| < 1");
    }
    return MarketModel::periodic(period, [=](double phase) {
        MarketPoint p;
        p.r = r;
        p.mu = Eigen::VectorXd::Constant(1, mu);
        p.sigma = Eigen::MatrixXd::Constant(
            1, 1, sigma_mean * (1.0 + amplitude * std::sin(2.0 * std::numbers::pi * phase / period)));
        return p;
    });
}

ErgodicValue z_quadrature(const MarketModel& model, const std::function<double(double)>& phi,
                          int nodes) {
    if (nodes < 2) {
        throw DomainError("z_quadrature: need at least 2 nodes");
    }
    ErgodicValue out;
    out.method = ErgodicMethod::Quadrature;
    switch (model.kind()) {
        case MarketModel::Kind::Constant:
            out.value = phi(model.merton_at(0.0, 0.0).lambda);
            break;
        case MarketModel::Kind::Periodic: {
            // Trapezoid rule on a periodic integrand reduces to equal weights.
            double acc = 0.0;
            for (int i = 0; i < nodes; ++i) {
                acc += phi(model.merton_at(model.period() * i / nodes, 0.0).lambda);
            }
            out.value = acc / nodes;
            break;
        }
        case MarketModel::Kind::OUStochVol: {
            const OUParams& p = model.ou();
            out.value = gauss_expectation(
                [&](double v) { return phi(std::fabs(p.mu) / model.vol(v)); }, p.vbar, p.nu, nodes);
            break;
        }
    }
    return out;
}

ErgodicValue z_time_average(const MarketModel& model, const std::function<double(double)>& phi,
                            double horizon, double dt, std::uint64_t seed, std::size_t batches) {
    if (!(dt > 0.0) || !(horizon >= dt)) {
        throw DomainError("z_time_average: need dt > 0 and horizon >= dt");
    }
    ErgodicValue out;
    out.method = ErgodicMethod::TimeAverage;
    if (model.kind() == MarketModel::Kind::Constant) {
        out.value = phi(model.merton_at(0.0, 0.0).lambda);
        return out;
    }
    const auto steps = static_cast<std::size_t>(std::llround(horizon / dt));
    std::vector<double> values(steps);
    if (model.kind() == MarketModel::Kind::Periodic) {
        for (std::size_t k = 0; k < steps; ++k) {
            values[k] = phi(model.merton_at(k * dt, 0.0).lambda);
        }
    } else {
        NormalStream stream(derive_seed(seed, 0x0e5a));
        const OUParams& p = model.ou();
        double v = p.v0;
        for (std::size_t k = 0; k < steps; ++k) {
            values[k] = phi(std::fabs(p.mu) / model.vol(v));
            v = model.ou_step(v, dt, stream());
        }
    }
    const BatchMeans bm = batch_means(values, std::min(batches, steps));
    out.value = bm.mean;
    out.error_estimate = bm.std_error;
    return out;
}

double mean_rate(const MarketModel& model, int nodes) {
    switch (model.kind()) {
        case MarketModel::Kind::Constant:
            return model.coefficients_at(0.0, 0.0).r;
        case MarketModel::Kind::OUStochVol:
            return model.ou().r;
        case MarketModel::Kind::Periodic: {
            double acc = 0.0;
            for (int i = 0; i < nodes; ++i) {
                acc += model.coefficients_at(model.period() * i / nodes, 0.0).r;
            }
            return acc / nodes;
        }
    }
    throw DomainError("mean_rate: unknown model kind");
}

StationaryVarianceCheck ou_stationary_variance(const MarketModel& model, double horizon,
                                               double dt, std::uint64_t seed,
                                               std::size_t batches) {
    if (model.kind() != MarketModel::Kind::OUStochVol) {
        throw DomainError("ou_stationary_variance: OU model required");
    }
    if (!(dt > 0.0) || !(horizon >= dt)) {
        throw DomainError("ou_stationary_variance: need dt > 0 and horizon >= dt");
    }
    const auto steps = static_cast<std::size_t>(std::llround(horizon / dt));
    const OUParams& p = model.ou();
    NormalStream stream(derive_seed(seed, 0x0e5b));
    std::vector<double> sq(steps);
    double v = p.v0;
    for (std::size_t k = 0; k < steps; ++k) {
        sq[k] = (v - p.vbar) * (v - p.vbar);
        v = model.ou_step(v, dt, stream());
    }
    const BatchMeans bm = batch_means(sq, std::min(batches, steps));
    return {bm.mean, bm.std_error, 1.0 / (2.0 * p.nu), steps};
}

}  // namespace rcg
