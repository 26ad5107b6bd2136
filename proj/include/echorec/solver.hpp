// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include <Eigen/Dense>

#include "echorec/linop.hpp"

namespace echorec {

/// sign(v) * max(|v| - theta, 0); exact zeros for |v| <= theta.
double soft_threshold(double v, double theta);
Eigen::VectorXd soft_threshold(const Eigen::VectorXd& v, double theta);

/// 0.5 * ||A x - y||^2 + lambda * ||x||_1.
double lasso_objective(const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                       const LinearOperator& op, double lambda);

/// One proximal-gradient step S_{lambda/L}(x - (1/L) A^T (A x - y)), matrix-free.
Eigen::VectorXd ista_step(const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                          const LinearOperator& op, double lambda, double lipschitz);

struct IstaResult {
    Eigen::VectorXd x;
    std::vector<double> objective_trace; ///< objective after each iteration, [0] = start
    int iterations = 0;
};

// Iterates ista_step from x = 0; stops at max_iters or when the relative
// objective change drops below stop_tol (strict, so stop_tol = 0 always
// runs the full budget).
IstaResult ista_solve(const Eigen::VectorXd& y, const LinearOperator& op, double lambda,
                      double lipschitz, int max_iters, double stop_tol = 0.0);

/// Scale-free default regularization weight: 0.1 * ||A^T y||_inf.
double default_lambda(const LinearOperator& op, const Eigen::VectorXd& y);

struct IstaPreset {
    const char* name;
    int iterations;
};

/// Table-style baselines.
inline constexpr IstaPreset kIsta200{"ISTA-200", 200};
inline constexpr IstaPreset kIsta500{"ISTA-500", 500};

} // namespace echorec
