// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <cstdint>

namespace echorec {

// Matrix-free linear operator pair (A, A^T). forward maps image space
// (cols) to data space (rows).
class LinearOperator {
public:
    virtual ~LinearOperator() = default;
    virtual Eigen::Index rows() const = 0;
    virtual Eigen::Index cols() const = 0;
    virtual Eigen::VectorXd forward(const Eigen::VectorXd& x) const = 0;
    virtual Eigen::VectorXd adjoint(const Eigen::VectorXd& y) const = 0;
};

/// Dense-matrix-backed operator, used by tests and the MLP architecture.
class DenseOperator final : public LinearOperator {
public:
    explicit DenseOperator(Eigen::MatrixXd a) : a_(std::move(a)) {}
    Eigen::Index rows() const override { return a_.rows(); }
    Eigen::Index cols() const override { return a_.cols(); }
    Eigen::VectorXd forward(const Eigen::VectorXd& x) const override { return a_ * x; }
    Eigen::VectorXd adjoint(const Eigen::VectorXd& y) const override {
        return a_.transpose() * y;
    }
    const Eigen::MatrixXd& matrix() const { return a_; }

private:
    Eigen::MatrixXd a_;
};

/// alpha * identity, for operator-level unit tests.
class ScalingOperator final : public LinearOperator {
public:
    ScalingOperator(Eigen::Index n, double alpha) : n_(n), alpha_(alpha) {}
    Eigen::Index rows() const override { return n_; }
    Eigen::Index cols() const override { return n_; }
    Eigen::VectorXd forward(const Eigen::VectorXd& x) const override { return alpha_ * x; }
    Eigen::VectorXd adjoint(const Eigen::VectorXd& y) const override { return alpha_ * y; }

private:
    Eigen::Index n_;
    double alpha_;
};

struct LipschitzEstimate {
    double value = 0.0;   ///< 1.01 * largest-eigenvalue estimate of A^T A
    bool converged = false;
    int iterations = 0;
};

inline constexpr std::uint64_t kPowerIterationSeed = 0x9E3779B97F4A7C15ULL;

// Power iteration on A^T A from a seeded random start. Returns the
// Rayleigh-quotient estimate scaled by the 1.01 safety factor so that
// 1/L stays a valid ISTA step size despite estimation error. A run that
// does not meet `tol` within `max_iters` returns the last estimate with
// converged = false.
LipschitzEstimate estimate_lipschitz(const LinearOperator& op, int max_iters = 500,
                                     double tol = 1e-8,
                                     std::uint64_t seed = kPowerIterationSeed);

} // namespace echorec
