#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "rcg/constraints.hpp"

namespace rcg::acceptance {

struct CriterionResult {
    int id = 0;
    std::string name;
    bool passed = false;
    std::string detail;  // measured values against their pinned tolerances
    double seconds = 0.0;
};

struct Options {
    std::uint64_t seed = 20240611;
};

inline constexpr int kCriterionCount = 10;

/// Runs one criterion (1..10).
CriterionResult run_criterion(int id, const Options& options = {});

/// Runs every criterion in order, reporting each as it finishes.
std::vector<CriterionResult> run_all(const Options& options = {},
                                     const std::function<void(const CriterionResult&)>& progress = {});

/// "PASS [n] name: detail (t s)"
std::string format_line(const CriterionResult& result);

/// A random market (n assets, m >= n Brownian motions) in which the
/// constraint binds at the given wealth.
struct ProjectionInstance {
    Eigen::VectorXd mu;
    Eigen::MatrixXd sigma;
    double wealth = 1.0;
};

ProjectionInstance random_binding_instance(std::mt19937_64& engine, const ConstraintPair& pair,
                                           int max_assets, double wealth);

/// Euclidean |sin| of the angle between two non-zero vectors.
double sin_angle(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

}  // namespace rcg::acceptance
