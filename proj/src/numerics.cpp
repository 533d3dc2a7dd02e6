#include "rcg/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/Eigenvalues>

namespace rcg {

void RootBracket::validate() const {
    if (!(lo < hi)) {
        throw DomainError("root bracket requires lo < hi");
    }
    if (!(tol_abs > 0.0) || !(tol_rel > 0.0)) {
        throw DomainError("root tolerances must be positive");
    }
    if (max_iter < 1) {
        throw DomainError("root solver needs max_iter >= 1");
    }
}

double norm_pdf(double z) noexcept {
    constexpr double kInvSqrt2Pi = 0.39894228040143267794;
    return kInvSqrt2Pi * std::exp(-0.5 * z * z);
}

double norm_cdf(double z) {
    if (!std::isfinite(z)) {
        throw DomainError("norm_cdf: non-finite argument");
    }
    return 0.5 * std::erfc(-z * std::numbers::sqrt2 * 0.5);
}

double log_norm_cdf(double z) {
    if (std::isnan(z)) {
        throw DomainError("log_norm_cdf: NaN argument");
    }
    if (z > -30.0) {
        return std::log(norm_cdf(z));
    }
    // Asymptotic series of the Mills ratio: N(z) ~ phi(z)/|z| (1 - 1/z^2 + 3/z^4 - 15/z^6).
    const double z2 = z * z;
    const double series = 1.0 - 1.0 / z2 + 3.0 / (z2 * z2) - 15.0 / (z2 * z2 * z2);
    return -0.5 * z2 - std::log(-z) - 0.5 * std::log(2.0 * std::numbers::pi) + std::log(series);
}

double inverse_mills(double z) {
    if (std::isnan(z)) {
        throw DomainError("inverse_mills: NaN argument");
    }
    if (z > -8.0) {
        return norm_pdf(z) / norm_cdf(z);
    }
    // Laplace continued fraction N(z)/phi(z) = 1/(x + 1/(x + 2/(x + 3/(x + ...)))), x = -z,
    // evaluated from the tail.
    const double x = -z;
    double tail = x;
    for (int k = 120; k >= 1; --k) tail = x + k / tail;
    return tail;
}

double norm_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) {
        throw DomainError("norm_quantile: probability must lie in (0,1), got " +
                          std::to_string(p));
    }
    const double q = p - 0.5;
    if (std::fabs(q) <= 0.425) {
        const double r = 0.180625 - q * q;
        return q *
               (((((((r * 2509.0809287301226727 + 33430.575583588128105) * r +
                     67265.770927008700853) * r + 45921.953931549871457) * r +
                   13731.693765509461125) * r + 1971.5909503065514427) * r +
                 133.14166789178437745) * r + 3.387132872796366608) /
               (((((((r * 5226.495278852854561 + 28729.085735721942674) * r +
                     39307.89580009271061) * r + 21213.794301586595867) * r +
                   5394.1960214247511077) * r + 687.1870074920579083) * r +
                 42.313330701600911252) * r + 1.0);
    }
    double r = q < 0.0 ? p : 1.0 - p;
    r = std::sqrt(-std::log(r));
    double val;
    if (r <= 5.0) {
        r -= 1.6;
        val = (((((((r * 7.7454501427834140764e-4 + 0.0227238449892691845833) * r +
                    0.24178072517745061177) * r + 1.27045825245236838258) * r +
                  3.64784832476320460504) * r + 5.7694972214606914055) * r +
                4.6303378461565452959) * r + 1.42343711074968357734) /
              (((((((r * 1.05075007164441684324e-9 + 5.475938084995344946e-4) * r +
                    0.0151986665636164571966) * r + 0.14810397642748007459) * r +
                  0.68976733498510000455) * r + 1.6763848301838038494) * r +
                2.05319162663775882187) * r + 1.0);
    } else {
        r -= 5.0;
        val = (((((((r * 2.01033439929228813265e-7 + 2.71155556874348757815e-5) * r +
                    0.0012426609473880784386) * r + 0.026532189526576123093) * r +
                  0.29656057182850489123) * r + 1.7848265399172913358) * r +
                5.4637849111641143699) * r + 6.6579046435011037772) /
              (((((((r * 2.04426310338993978564e-15 + 1.4215117583164458887e-7) * r +
                    1.8463183175100546818e-5) * r + 7.868691311456132591e-4) * r +
                  0.0148753612908506148525) * r + 0.13692988092273580531) * r +
                0.59983220655588793769) * r + 1.0);
    }
    return q < 0.0 ? -val : val;
}

namespace {

bool width_converged(double lo, double hi, double x, const RootBracket& b) {
    return hi - lo <= b.tol_rel * std::fabs(x);
}

RootResult solve_impl(const std::function<double(double)>& fn,
                      const std::function<double(double)>* derivative,
                      const RootBracket& b) {
    b.validate();
    double lo = b.lo;
    double hi = b.hi;
    const double flo = fn(lo);
    const double fhi = fn(hi);
    if (!(flo <= 0.0 && fhi >= 0.0)) {
        throw BracketError("increasing root: need fn(lo) <= 0 <= fn(hi), got fn(" +
                           std::to_string(lo) + ")=" + std::to_string(flo) + ", fn(" +
                           std::to_string(hi) + ")=" + std::to_string(fhi));
    }
    if (flo == 0.0) return {lo, lo, lo, 0};
    if (fhi == 0.0) return {hi, hi, hi, 0};

    // Newton starts from whichever endpoint has the smaller residual.
    double x = 0.5 * (lo + hi);
    if (derivative != nullptr) {
        x = (-flo < fhi) ? lo : hi;
    }
    double prev_step = hi - lo;
    double step = prev_step;
    for (int iter = 1; iter <= b.max_iter; ++iter) {
        const double fx = fn(x);
        if (std::fabs(fx) <= b.tol_abs) {
            if (fx <= 0.0) lo = x; else hi = x;
            return {x, lo, hi, iter};
        }
        if (fx < 0.0) lo = x; else hi = x;
        if (width_converged(lo, hi, x, b)) {
            return {x, lo, hi, iter};
        }

        double next = 0.5 * (lo + hi);
        if (derivative != nullptr) {
            const double dfx = (*derivative)(x);
            if (dfx > 0.0) {
                const double candidate = x - fx / dfx;
                const bool inside = candidate > lo && candidate < hi;
                const bool shrinking = std::fabs(2.0 * fx) < std::fabs(prev_step * dfx);
                if (inside && shrinking) {
                    next = candidate;
                }
            }
        }
        prev_step = step;
        step = next - x;
        if (next == x) {
            return {x, lo, hi, iter};
        }
        x = next;
    }
    throw ConvergenceError("increasing root: no convergence within " +
                           std::to_string(b.max_iter) + " iterations");
}

}  // namespace

RootResult bracket_increasing_root(const std::function<double(double)>& fn,
                                   const RootBracket& bracket) {
    return solve_impl(fn, nullptr, bracket);
}

RootResult bracket_increasing_root(const std::function<double(double)>& fn,
                                   const std::function<double(double)>& derivative,
                                   const RootBracket& bracket) {
    return solve_impl(fn, &derivative, bracket);
}

double solve_increasing_root(const std::function<double(double)>& fn, const RootBracket& bracket) {
    return solve_impl(fn, nullptr, bracket).root;
}

double solve_increasing_root(const std::function<double(double)>& fn,
                             const std::function<double(double)>& derivative,
                             const RootBracket& bracket) {
    return solve_impl(fn, &derivative, bracket).root;
}

GaussHermiteRule gauss_hermite_rule(int n) {
    if (n < 2) {
        throw DomainError("gauss_hermite_rule: need at least 2 nodes");
    }
    // Golub-Welsch eigenvalues as starting points, then Newton polishing on
    // the orthonormal Hermite recurrence for full-precision nodes and weights.
    Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(n, n);
    for (int k = 1; k < n; ++k) {
        jacobi(k, k - 1) = jacobi(k - 1, k) = std::sqrt(0.5 * k);
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(jacobi, Eigen::EigenvaluesOnly);
    const Eigen::VectorXd guesses = solver.eigenvalues();

    const double pim4 = 1.0 / std::pow(std::numbers::pi, 0.25);
    GaussHermiteRule rule;
    rule.nodes.resize(n);
    rule.weights.resize(n);
    for (int i = 0; i < n; ++i) {
        double x = guesses(i);
        double pp = 0.0;
        for (int it = 0; it < 20; ++it) {
            double p1 = pim4;
            double p2 = 0.0;
            for (int j = 1; j <= n; ++j) {
                const double p3 = p2;
                p2 = p1;
                p1 = x * std::sqrt(2.0 / j) * p2 - std::sqrt((j - 1.0) / j) * p3;
            }
            pp = std::sqrt(2.0 * n) * p2;
            const double dx = p1 / pp;
            x -= dx;
            if (std::fabs(dx) <= 1e-15 * std::max(1.0, std::fabs(x))) {
                break;
            }
        }
        // Re-evaluate the derivative at the polished node.
        double p1 = pim4;
        double p2 = 0.0;
        for (int j = 1; j <= n; ++j) {
            const double p3 = p2;
            p2 = p1;
            p1 = x * std::sqrt(2.0 / j) * p2 - std::sqrt((j - 1.0) / j) * p3;
        }
        pp = std::sqrt(2.0 * n) * p2;
        rule.nodes[i] = x;
        rule.weights[i] = 2.0 / (pp * pp);
    }
    return rule;
}

double gauss_expectation(const std::function<double(double)>& phi, double mean,
                         double concentration, int nodes) {
    if (!(concentration > 0.0)) {
        throw DomainError("gauss_expectation: concentration must be positive");
    }
    const GaussHermiteRule rule = gauss_hermite_rule(nodes);
    const double scale = 1.0 / std::sqrt(concentration);
    double acc = 0.0;
    for (int i = 0; i < nodes; ++i) {
        acc += rule.weights[i] * phi(mean + scale * rule.nodes[i]);
    }
    return acc / std::sqrt(std::numbers::pi);
}

BatchMeans batch_means(std::span<const double> values, std::size_t batches) {
    if (batches < 2 || values.size() < batches) {
        throw DomainError("batch_means: need at least 2 batches and one value per batch");
    }
    const std::size_t per = values.size() / batches;
    std::vector<double> means(batches);
    for (std::size_t b = 0; b < batches; ++b) {
        means[b] = sample_mean(values.subspan(b * per, per)).mean;
    }
    BatchMeans out = sample_mean(means);
    out.mean = sample_mean(values).mean;
    out.batches = batches;
    return out;
}

BatchMeans sample_mean(std::span<const double> values) {
    if (values.empty()) {
        throw DomainError("sample_mean: no values");
    }
    // Kahan-compensated sums keep results independent of accumulation length.
    double sum = 0.0;
    double comp = 0.0;
    for (double v : values) {
        const double y = v - comp;
        const double t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
    const double n = static_cast<double>(values.size());
    const double mean = sum / n;
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    BatchMeans out{mean, 0.0, values.size()};
    if (values.size() > 1) {
        out.std_error = std::sqrt(ss / (n - 1.0) / n);
    }
    return out;
}

}  // namespace rcg
