#include "rcg/projection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include "rcg/errors.hpp"
#include "rcg/numerics.hpp"
#include "rcg/rng.hpp"

namespace rcg {

MertonData merton_proportion(const Eigen::VectorXd& mu, const Eigen::MatrixXd& sigma) {
    if (sigma.rows() != mu.size() || mu.size() == 0 || sigma.cols() < sigma.rows()) {
        throw DomainError("merton_proportion: sigma must be n x m with n = dim(mu) <= m");
    }
    const Eigen::MatrixXd cov = sigma * sigma.transpose();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov, Eigen::EigenvaluesOnly);
    const double largest = eig.eigenvalues().maxCoeff();
    const double smallest = eig.eigenvalues().minCoeff();
    if (!(smallest > 0.0) || largest / smallest > 1e12) {
        throw SingularityError("merton_proportion: sigma sigma' is singular or ill-conditioned");
    }
    const Eigen::LLT<Eigen::MatrixXd> llt(cov);
    Eigen::VectorXd zeta = llt.solve(mu);
    // One step of iterative refinement keeps the residual at rounding level.
    zeta += llt.solve(mu - cov * zeta);
    const double residual = (cov * zeta - mu).norm();
    if (residual > 1e-10 * std::max(mu.norm(), std::numeric_limits<double>::min())) {
        throw SingularityError("merton_proportion: residual " + std::to_string(residual) +
                               " exceeds tolerance");
    }
    return {zeta, (sigma.transpose() * zeta).norm()};
}

double d_sigma(const Eigen::VectorXd& zeta1, const Eigen::VectorXd& zeta2,
               const Eigen::MatrixXd& sigma) {
    if (zeta1.size() != zeta2.size() || sigma.rows() != zeta1.size()) {
        throw DomainError("d_sigma: dimension mismatch");
    }
    return (sigma.transpose() * (zeta1 - zeta2)).norm();
}

double beta_of(const ConstraintPair& pair, double lambda, double hval) {
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
        throw DomainError("beta_of: lambda must be finite and non-negative");
    }
    if (hval == kInfinity || lambda == 0.0) {
        return 1.0;
    }
    if (g_eval(pair, lambda, 1.0) <= hval) {
        return 1.0;
    }
    auto residual = [&](double b) { return g_eval(pair, lambda, b) - hval; };
    const RootBracket bracket{.lo = 0.0, .hi = 1.0};
    RootResult res;
    if (pair.f_gradient(0.0, 0.0)) {
        auto slope = [&](double b) { return *g_derivative(pair, lambda, b); };
        res = bracket_increasing_root(residual, slope, bracket);
    } else {
        res = bracket_increasing_root(residual, bracket);
    }
    // Step back onto the admissible side when the last iterate sits just outside.
    double b = res.root;
    double backoff = 4.0 * std::numeric_limits<double>::epsilon() * b;
    for (int i = 0; i < 200 && residual(b) > 0.0; ++i) {
        b = std::max(res.lo, b - backoff);
        backoff *= 2.0;
    }
    if (!(b > 0.0)) {
        throw ConvergenceError("beta_of: root collapsed to zero");
    }
    return b;
}

double delta(const ConstraintPair& pair, double lambda) { return beta_of(pair, lambda, 0.0); }

double delta_star(const ConstraintPair& pair, double lambda, double x) {
    return beta_of(pair, lambda, pair.h(x));
}

ProjectionResult project_merton(const ConstraintPair& pair, const ConstraintSetQuery& query) {
    const MertonData merton = merton_proportion(query.mu, query.sigma);
    const double beta = beta_of(pair, merton.lambda, pair.h(query.wealth));
    return {beta, beta * merton.zeta_m, beta < 1.0};
}

namespace {

// Constraint residual in whitened coordinates w = L' zeta, where
// sigma sigma' = L L'. There |zeta' sigma| = |w| and zeta' mu = w' w_M.
struct WhitenedProblem {
    const ConstraintPair* pair;
    Eigen::VectorXd w_merton;
    double hval;

    double constraint(const Eigen::VectorXd& w) const {
        return pair->f(w.dot(w_merton), w.norm()) - hval;
    }
};

Eigen::VectorXd numeric_gradient(const WhitenedProblem& p, const Eigen::VectorXd& w) {
    const Eigen::Index n = w.size();
    Eigen::VectorXd grad(n);
    const double step = 1e-6 * (1.0 + w.norm());
    for (Eigen::Index i = 0; i < n; ++i) {
        Eigen::VectorXd up = w;
        Eigen::VectorXd dn = w;
        up(i) += step;
        dn(i) -= step;
        grad(i) = (p.constraint(up) - p.constraint(dn)) / (2.0 * step);
    }
    return grad;
}

// Minimizes 0.5 |w - w_M|^2 + eta * c(w) by damped Newton with finite-difference
// derivatives. The objective is strongly convex, so every start reaches the
// same minimizer; the best of the starts is kept.
Eigen::VectorXd penalized_minimizer(const WhitenedProblem& p, double eta,
                                    const std::vector<Eigen::VectorXd>& starts) {
    auto objective = [&](const Eigen::VectorXd& w) {
        return 0.5 * (w - p.w_merton).squaredNorm() + eta * p.constraint(w);
    };
    auto gradient = [&](const Eigen::VectorXd& w) {
        return Eigen::VectorXd((w - p.w_merton) + eta * numeric_gradient(p, w));
    };
    const Eigen::Index n = p.w_merton.size();
    Eigen::VectorXd best;
    double best_value = std::numeric_limits<double>::infinity();
    for (const Eigen::VectorXd& start : starts) {
        Eigen::VectorXd w = start;
        double value = objective(w);
        for (int iter = 0; iter < 200; ++iter) {
            const Eigen::VectorXd grad = gradient(w);
            if (grad.norm() <= 1e-13 * (1.0 + p.w_merton.norm())) {
                break;
            }
            Eigen::MatrixXd hess(n, n);
            const double step = 1e-5 * (1.0 + w.norm());
            for (Eigen::Index i = 0; i < n; ++i) {
                Eigen::VectorXd up = w;
                Eigen::VectorXd dn = w;
                up(i) += step;
                dn(i) -= step;
                hess.col(i) = (gradient(up) - gradient(dn)) / (2.0 * step);
            }
            hess = 0.5 * (hess + hess.transpose()).eval();
            Eigen::VectorXd direction = -hess.ldlt().solve(grad);
            if (!direction.allFinite() || direction.dot(grad) >= 0.0) {
                direction = -grad;
            }
            double t = 1.0;
            Eigen::VectorXd trial = w + direction;
            double trial_value = objective(trial);
            while (trial_value > value && t > 1e-12) {
                t *= 0.5;
                trial = w + t * direction;
                trial_value = objective(trial);
            }
            if (trial_value > value) {
                break;
            }
            const double moved = (trial - w).norm();
            w = trial;
            value = trial_value;
            if (moved <= 1e-15 * (1.0 + w.norm())) {
                break;
            }
        }
        if (value < best_value) {
            best_value = value;
            best = w;
        }
    }
    return best;
}

Eigen::VectorXd oracle_single_asset(const ConstraintPair& pair, const ConstraintSetQuery& query,
                                    double hval, const Eigen::VectorXd& zeta_m,
                                    const OracleOptions& options) {
    const Eigen::VectorXd& mu = query.mu;
    const Eigen::MatrixXd& sigma = query.sigma;
    const double row = sigma.row(0).norm();
    auto admissible = [&](double z) {
        return pair.f(z * mu(0), std::fabs(z) * row) <= hval;
    };
    // Scan outwards until the set has been left in both directions.
    double reach = std::max(1.0, 2.0 * std::fabs(zeta_m(0)));
    while (admissible(reach) || admissible(-reach)) {
        reach *= 2.0;
    }
    const int points = std::max(options.grid_points, 101);
    double best = 0.0;
    double best_dist = std::numeric_limits<double>::infinity();
    int best_index = 0;
    for (int i = 0; i < points; ++i) {
        const double z = -reach + 2.0 * reach * i / (points - 1);
        if (!admissible(z)) continue;
        const double dist = row * std::fabs(z - zeta_m(0));
        if (dist < best_dist) {
            best_dist = dist;
            best = z;
            best_index = i;
        }
    }
    // Refine between the best admissible node and its neighbour towards zeta_M.
    const double spacing = 2.0 * reach / (points - 1);
    const double toward = zeta_m(0) > best ? 1.0 : -1.0;
    double inside = best;
    double outside = std::clamp(best + toward * spacing, -reach, reach);
    (void)best_index;
    if (!admissible(outside)) {
        for (int it = 0; it < 200 && std::fabs(outside - inside) > 1e-16 * std::fabs(inside); ++it) {
            const double mid = 0.5 * (inside + outside);
            if (admissible(mid)) inside = mid; else outside = mid;
        }
    }
    Eigen::VectorXd out(1);
    out(0) = inside;
    return out;
}

}  // namespace

Eigen::VectorXd oracle_project(const ConstraintPair& pair, const ConstraintSetQuery& query,
                               const OracleOptions& options) {
    const MertonData merton = merton_proportion(query.mu, query.sigma);
    const double hval = pair.h(query.wealth);
    if (hval == kInfinity) {
        throw DomainError("oracle_project: constraint set is unbounded (h = +inf)");
    }
    const ConstraintSetQuery q = query;
    if (pair.f(merton.zeta_m.dot(q.mu), merton.lambda) <= hval) {
        return merton.zeta_m;
    }
    if (q.mu.size() == 1) {
        return oracle_single_asset(pair, q, hval, merton.zeta_m, options);
    }

    const Eigen::MatrixXd cov = q.sigma * q.sigma.transpose();
    const Eigen::MatrixXd lower = Eigen::LLT<Eigen::MatrixXd>(cov).matrixL();
    const Eigen::MatrixXd upper = lower.transpose();
    WhitenedProblem problem{&pair, upper * merton.zeta_m, hval};

    const Eigen::Index n = q.mu.size();
    std::mt19937_64 engine(derive_seed(options.seed, static_cast<std::uint64_t>(n)));
    std::normal_distribution<double> normal;
    std::vector<Eigen::VectorXd> starts{problem.w_merton, Eigen::VectorXd::Zero(n)};
    for (int s = 2; s < options.starts; ++s) {
        Eigen::VectorXd w(n);
        for (Eigen::Index i = 0; i < n; ++i) w(i) = normal(engine);
        starts.push_back(w * problem.w_merton.norm());
    }

    // c(w(eta)) decreases in eta; bisect for the multiplier that puts the
    // penalized minimizer on the boundary.
    double eta_lo = 0.0;
    double eta_hi = 1.0;
    Eigen::VectorXd w_hi = penalized_minimizer(problem, eta_hi, starts);
    for (int i = 0; i < 200 && problem.constraint(w_hi) > 0.0; ++i) {
        eta_hi *= 2.0;
        w_hi = penalized_minimizer(problem, eta_hi, starts);
    }
    for (int i = 0; i < 200; ++i) {
        const double eta = 0.5 * (eta_lo + eta_hi);
        const Eigen::VectorXd w = penalized_minimizer(problem, eta, {w_hi});
        if (problem.constraint(w) > 0.0) {
            eta_lo = eta;
        } else {
            eta_hi = eta;
            w_hi = w;
        }
        if (eta_hi - eta_lo <= 1e-15 * eta_hi) {
            break;
        }
    }
    return upper.triangularView<Eigen::Upper>().solve(w_hi);
}

LipschitzReport lipschitz_report(const ConstraintPair& pair, std::span<const double> lambdas,
                                 std::span<const std::pair<double, double>> log_wealth_pairs) {
    LipschitzReport report;
    for (double lambda : lambdas) {
        for (const auto& [y1, y2] : log_wealth_pairs) {
            const double x1 = std::exp(y1);
            const double x2 = std::exp(y2);
            if (x1 <= pair.threshold() || x2 <= pair.threshold()) {
                throw DomainError("lipschitz_report: wealth at or below the constraint threshold");
            }
            ++report.pairs;
            const double gap = std::fabs(y1 - y2);
            if (gap == 0.0) continue;
            const double ratio =
                std::fabs(delta_star(pair, lambda, x1) - delta_star(pair, lambda, x2)) / gap;
            report.max_ratio = std::max(report.max_ratio, ratio);
            if (gap < 1e-3) {
                report.max_ratio_small = std::max(report.max_ratio_small, ratio);
            } else {
                report.max_ratio_large = std::max(report.max_ratio_large, ratio);
            }
        }
    }
    report.blowup = report.max_ratio_large > 0.0 &&
                    report.max_ratio_small > 10.0 * report.max_ratio_large;
    return report;
}

}  // namespace rcg
