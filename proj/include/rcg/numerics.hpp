#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <limits>
#include <string>
#include <vector>

#include "rcg/errors.hpp"

namespace rcg {

/// Search interval and stopping rule for a scalar root.
struct RootBracket {
    double lo = 0.0;
    double hi = 1.0;
    double tol_abs = 1e-12;
    double tol_rel = 1e-12;
    int max_iter = 200;

    void validate() const;
};

/// Final iterate together with the bracket that still encloses the root:
/// fn(lo) <= 0 <= fn(hi) holds on return.
struct RootResult {
    double root = 0.0;
    double lo = 0.0;
    double hi = 0.0;
    int iterations = 0;
};

/// Standard normal density.
double norm_pdf(double z) noexcept;

/// Standard normal CDF, absolute error below 1e-14. Throws DomainError for NaN/inf.
double norm_cdf(double z);

/// log N(z), accurate far into the lower tail where N(z) underflows.
double log_norm_cdf(double z);

/// Inverse Mills ratio phi(z) / N(z), accurate in the lower tail.
double inverse_mills(double z);

/// Inverse of norm_cdf on (0,1) (Wichura's AS241 rational approximations).
double norm_quantile(double p);

/// Root of a continuous increasing function. Plain bisection.
RootResult bracket_increasing_root(const std::function<double(double)>& fn,
                                   const RootBracket& bracket);

/// Root of a continuous increasing function with a derivative available.
/// Newton steps are taken while they stay inside the bracket and shrink the
/// residual; otherwise the iteration falls back to bisection.
RootResult bracket_increasing_root(const std::function<double(double)>& fn,
                                   const std::function<double(double)>& derivative,
                                   const RootBracket& bracket);

double solve_increasing_root(const std::function<double(double)>& fn, const RootBracket& bracket);

double solve_increasing_root(const std::function<double(double)>& fn,
                             const std::function<double(double)>& derivative,
                             const RootBracket& bracket);

/// Nodes and weights for the weight function exp(-t^2) on the real line.
struct GaussHermiteRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

GaussHermiteRule gauss_hermite_rule(int nodes);

/// Expectation of phi under the Gaussian law with density
/// sqrt(c/pi) * exp(-c (x - mean)^2), i.e. N(mean, 1/(2c)), using an
/// n-node Gauss-Hermite rule.
double gauss_expectation(const std::function<double(double)>& phi, double mean,
                         double concentration, int nodes);

/// Mean and its standard error from the means of equal consecutive batches
/// (trailing values that do not fill a batch are dropped from the error only).
struct BatchMeans {
    double mean = 0.0;
    double std_error = 0.0;
    std::size_t batches = 0;
};

BatchMeans batch_means(std::span<const double> values, std::size_t batches);

/// Sample mean and standard error of i.i.d. values (compensated summation).
BatchMeans sample_mean(std::span<const double> values);

}  // namespace rcg
