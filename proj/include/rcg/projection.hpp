#pragma once

#include <cstdint>
#include <span>
#include <utility>

#include <Eigen/Core>

#include "rcg/constraints.hpp"

namespace rcg {

/// Unconstrained growth-optimal proportions zeta_M (sigma sigma' zeta_M = mu)
/// and their portfolio volatility lambda = |zeta_M' sigma|.
struct MertonData {
    Eigen::VectorXd zeta_m;
    double lambda = 0.0;
};

/// Throws SingularityError when sigma sigma' is numerically singular
/// (condition number above 1e12) and DomainError on dimension mismatch.
MertonData merton_proportion(const Eigen::VectorXd& mu, const Eigen::MatrixXd& sigma);

/// |sigma' (zeta1 - zeta2)|
double d_sigma(const Eigen::VectorXd& zeta1, const Eigen::VectorXd& zeta2,
               const Eigen::MatrixXd& sigma);

struct ProjectionResult {
    double beta = 1.0;
    Eigen::VectorXd zeta_proj;
    bool binding = false;
};

/// Scale in (0,1] that takes zeta_M to the boundary of {f <= hval}: 1 when
/// hval is infinite, lambda is 0, or g(1) <= hval; otherwise the root of
/// g(beta) = hval in (0,1). The returned beta always satisfies g(beta) <= hval.
double beta_of(const ConstraintPair& pair, double lambda, double hval);

/// Limiting scale as wealth grows without bound (hval = 0). Depends on lambda only.
double delta(const ConstraintPair& pair, double lambda);

/// Scale at wealth x: beta_of(pair, lambda, h(x)).
double delta_star(const ConstraintPair& pair, double lambda, double x);

/// d_sigma-projection of zeta_M onto the admissible set at the query's wealth.
ProjectionResult project_merton(const ConstraintPair& pair, const ConstraintSetQuery& query);

struct OracleOptions {
    int starts = 6;
    std::uint64_t seed = 7;
    int grid_points = 200001;
};

/// Brute-force d_sigma-projection of zeta_M onto the admissible set. Makes no
/// use of the ray structure: a dense grid for one asset, otherwise a
/// Lagrange-multiplier search whose inner problems are solved by damped
/// Newton iterations from several random starts. Requires a finite h(x).
Eigen::VectorXd oracle_project(const ConstraintPair& pair, const ConstraintSetQuery& query,
                               const OracleOptions& options = {});

struct LipschitzReport {
    std::size_t pairs = 0;
    double max_ratio = 0.0;         // L: max |beta(y1) - beta(y2)| / |y1 - y2|
    double max_ratio_small = 0.0;   // over pairs with |y1 - y2| < 1e-3
    double max_ratio_large = 0.0;   // over the remaining pairs
    bool blowup = false;            // small-gap ratios exceed the large-gap ones tenfold
};

/// Empirical Lipschitz constant of log-wealth -> beta over the given
/// lambda values (one per time point) and log-wealth pairs. Every wealth must
/// exceed the pair's threshold.
LipschitzReport lipschitz_report(const ConstraintPair& pair, std::span<const double> lambdas,
                                 std::span<const std::pair<double, double>> log_wealth_pairs);

}  // namespace rcg
