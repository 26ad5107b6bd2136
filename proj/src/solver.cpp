// SPDX-License-Identifier: Apache-2.0
#include "echorec/solver.hpp"

#include <cmath>
#include <stdexcept>

namespace echorec {

double soft_threshold(double v, double theta) {
    if (theta < 0.0) throw std::invalid_argument("soft_threshold: theta must be >= 0");
    const double mag = std::abs(v) - theta;
    return mag > 0.0 ? (v > 0.0 ? mag : -mag) : 0.0;
}

Eigen::VectorXd soft_threshold(const Eigen::VectorXd& v, double theta) {
    if (theta < 0.0) throw std::invalid_argument("soft_threshold: theta must be >= 0");
    Eigen::VectorXd out(v.size());
    for (Eigen::Index i = 0; i < v.size(); ++i) out[i] = soft_threshold(v[i], theta);
    return out;
}

double lasso_objective(const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                       const LinearOperator& op, double lambda) {
    if (x.size() != op.cols() || y.size() != op.rows())
        throw std::invalid_argument("lasso_objective: dimension mismatch");
    return 0.5 * (op.forward(x) - y).squaredNorm() + lambda * x.lpNorm<1>();
}

Eigen::VectorXd ista_step(const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                          const LinearOperator& op, double lambda, double lipschitz) {
    if (!(lipschitz > 0.0)) throw std::invalid_argument("ista_step: L must be positive");
    if (x.size() != op.cols() || y.size() != op.rows())
        throw std::invalid_argument("ista_step: dimension mismatch");
    const double step = 1.0 / lipschitz;
    const Eigen::VectorXd grad = op.adjoint(op.forward(x) - y);
    return soft_threshold(Eigen::VectorXd(x - step * grad), lambda / lipschitz);
}

IstaResult ista_solve(const Eigen::VectorXd& y, const LinearOperator& op, double lambda,
                      double lipschitz, int max_iters, double stop_tol) {
    IstaResult res;
    res.x = Eigen::VectorXd::Zero(op.cols());
    double obj = lasso_objective(res.x, y, op, lambda);
    res.objective_trace.push_back(obj);
    for (int it = 0; it < max_iters; ++it) {
        res.x = ista_step(res.x, y, op, lambda, lipschitz);
        const double next = lasso_objective(res.x, y, op, lambda);
        res.objective_trace.push_back(next);
        res.iterations = it + 1;
        const double rel = obj > 0.0 ? std::abs(next - obj) / obj : std::abs(next - obj);
        obj = next;
        if (rel < stop_tol) break;
    }
    return res;
}

double default_lambda(const LinearOperator& op, const Eigen::VectorXd& y) {
    return 0.1 * op.adjoint(y).lpNorm<Eigen::Infinity>();
}

} // namespace echorec
