// SPDX-License-Identifier: Apache-2.0
#include "echorec/compress.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <Eigen/QR>
#include <Eigen/SVD>

#include "echorec/rng.hpp"

namespace echorec {

std::string to_string(FactorMethod m) {
    switch (m) {
        case FactorMethod::omp: return "omp";
        case FactorMethod::svd: return "svd";
        case FactorMethod::random: return "random";
    }
    return "?";
}

FactorMethod factor_method_from_string(const std::string& s) {
    if (s == "omp") return FactorMethod::omp;
    if (s == "svd") return FactorMethod::svd;
    if (s == "random") return FactorMethod::random;
    throw std::invalid_argument("unknown factorization method: " + s);
}

std::string to_string(RandomScheme s) {
    switch (s) {
        case RandomScheme::xavier: return "xavier";
        case RandomScheme::kaiming: return "kaiming";
        case RandomScheme::orthogonal: return "orthogonal";
    }
    return "?";
}

RandomScheme random_scheme_from_string(const std::string& s) {
    if (s == "xavier") return RandomScheme::xavier;
    if (s == "kaiming") return RandomScheme::kaiming;
    if (s == "orthogonal") return RandomScheme::orthogonal;
    throw std::invalid_argument("unknown random scheme: " + s);
}

double factorization_error(const Eigen::MatrixXd& w, const Eigen::MatrixXd& b,
                           const Eigen::MatrixXd& c) {
    if (c.rows() != w.rows() || c.cols() != b.rows() || b.cols() != w.cols())
        throw std::invalid_argument("factorization_error: shape mismatch");
    return (w - c * b).norm();
}

Eigen::MatrixXd least_squares_mixing(const Eigen::MatrixXd& w, const Eigen::MatrixXd& b,
                                     bool* rank_deficient) {
    if (b.size() == 0 || b.norm() == 0.0)
        throw std::invalid_argument("least_squares_mixing: B must be nonzero");
    if (b.cols() != w.cols())
        throw std::invalid_argument("least_squares_mixing: kernel length mismatch");
    // min_C ||W - C B||_F  <=>  B^T C^T ~= W^T, column by column
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(b.transpose());
    if (rank_deficient) *rank_deficient = cod.rank() < b.rows();
    return cod.solve(w.transpose()).transpose();
}

std::pair<FactorPayload, FactorizationReport>
omp_select_basis(const Eigen::MatrixXd& w, int max_basis, double residual_tol) {
    const auto c_out = static_cast<int>(w.rows());
    const double w_norm = w.norm();
    if (w_norm == 0.0) throw std::invalid_argument("omp_select_basis: W is all-zero");
    if (max_basis < 1 || max_basis > c_out)
        throw std::invalid_argument("omp_select_basis: max_basis out of [1, C_out]");
    if (residual_tol < 0.0) residual_tol = kResidualTolScale * w_norm;

    FactorPayload payload;
    FactorizationReport report;
    std::vector<int> selected;
    std::vector<bool> eligible(c_out, true);
    Eigen::MatrixXd residual = w;

    while (static_cast<int>(selected.size()) < max_basis &&
           residual.norm() > residual_tol) {
        // correlation energy E_j = sum_i <R_i, W_j>^2 for candidates
        int best = -1;
        double best_energy = -1.0;
        for (int j = 0; j < c_out; ++j) {
            if (!eligible[j]) continue;
            const double energy = (residual * w.row(j).transpose()).squaredNorm();
            if (energy > best_energy) {
                best_energy = energy;
                best = j;
            }
        }
        if (best < 0) break; // no candidates left
        eligible[best] = false;

        // skip rows already inside the selected span
        if (!selected.empty()) {
            Eigen::MatrixXd basis_t = payload.basis.transpose();
            Eigen::VectorXd coeff =
                Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd>(basis_t).solve(
                    w.row(best).transpose());
            const double perp = (w.row(best).transpose() - basis_t * coeff).norm();
            if (perp < 1e-12 * w_norm) continue;
        } else if (w.row(best).norm() < 1e-12 * w_norm) {
            continue;
        }

        selected.push_back(best);
        payload.basis.conservativeResize(selected.size(), w.cols());
        payload.basis.row(selected.size() - 1) = w.row(best);

        bool deficient = false;
        payload.mixing = least_squares_mixing(w, payload.basis, &deficient);
        report.used_pseudo_inverse = report.used_pseudo_inverse || deficient;
        residual = w - payload.mixing * payload.basis;
        report.residual_history.push_back(residual.norm());
    }

    if (selected.empty())
        throw std::invalid_argument("omp_select_basis: no selectable rows");
    if (static_cast<int>(selected.size()) < max_basis &&
        residual.norm() > residual_tol)
        report.note = "stopped early: remaining rows degenerate";

    payload.selected_rows = selected;
    payload.degenerate = report.used_pseudo_inverse;
    report.final_error = residual.norm();
    const auto m = static_cast<double>(selected.size());
    report.compression_ratio =
        (static_cast<double>(c_out) * w.cols()) / (m * (w.cols() + c_out));
    return {std::move(payload), std::move(report)};
}

std::pair<FactorPayload, FactorizationReport>
svd_factorize(const Eigen::MatrixXd& w, int num_basis) {
    const auto c_out = static_cast<int>(w.rows());
    const auto kernel_len = static_cast<int>(w.cols());
    const int rank_bound = std::min(c_out, kernel_len);
    if (num_basis < 1 || num_basis > rank_bound)
        throw std::invalid_argument("svd_factorize: num_basis out of [1, min(C_out, K)]");

    Eigen::BDCSVD<Eigen::MatrixXd> svd(w, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Eigen::VectorXd& sigma = svd.singularValues();

    FactorPayload payload;
    payload.basis = svd.matrixV().leftCols(num_basis).transpose();
    payload.mixing = svd.matrixU().leftCols(num_basis) *
                     sigma.head(num_basis).asDiagonal();

    FactorizationReport report;
    for (int m = 1; m <= num_basis; ++m)
        report.residual_history.push_back(
            std::sqrt(sigma.tail(rank_bound - m).squaredNorm()));
    report.final_error = report.residual_history.back();
    report.compression_ratio = (static_cast<double>(c_out) * kernel_len) /
                               (static_cast<double>(num_basis) * (kernel_len + c_out));
    const double tiny = 1e-14 * (sigma.size() ? sigma[0] : 0.0);
    if (sigma[num_basis - 1] <= tiny) {
        payload.degenerate = true;
        report.note = "num_basis exceeds numerical rank; trailing factors zero-padded";
    }
    return {std::move(payload), std::move(report)};
}

namespace {

Eigen::MatrixXd random_matrix(int rows, int cols, RandomScheme scheme, Rng& rng) {
    Eigen::MatrixXd m(rows, cols);
    switch (scheme) {
        case RandomScheme::xavier: {
            const double sd = std::sqrt(2.0 / (rows + cols));
            for (int j = 0; j < cols; ++j)
                for (int i = 0; i < rows; ++i) m(i, j) = rng.normal(0.0, sd);
            return m;
        }
        case RandomScheme::kaiming: {
            const double sd = std::sqrt(2.0 / cols); // fan_in = cols
            for (int j = 0; j < cols; ++j)
                for (int i = 0; i < rows; ++i) m(i, j) = rng.normal(0.0, sd);
            return m;
        }
        case RandomScheme::orthogonal: {
            // rows of the result orthonormal; requires rows <= cols
            if (rows > cols)
                throw std::invalid_argument("orthogonal scheme needs rows <= cols");
            Eigen::MatrixXd g(cols, rows);
            for (int j = 0; j < rows; ++j)
                for (int i = 0; i < cols; ++i) g(i, j) = rng.normal();
            Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
            Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(cols, rows);
            Eigen::MatrixXd r = qr.matrixQR().topRows(rows).triangularView<Eigen::Upper>();
            for (int j = 0; j < rows; ++j)
                if (r(j, j) < 0) q.col(j) = -q.col(j);
            return q.transpose();
        }
    }
    throw std::invalid_argument("unknown random scheme");
}

} // namespace

FactorPayload random_factorize(int c_out, int kernel_len, int num_basis,
                               RandomScheme scheme, std::uint64_t seed) {
    if (num_basis < 1 || num_basis > c_out)
        throw std::invalid_argument("random_factorize: num_basis out of [1, C_out]");
    Rng rng(derive_seed(seed, "random-factorize"));
    FactorPayload payload;
    payload.basis = random_matrix(num_basis, kernel_len, scheme, rng);
    // mixing is C_out x M; the orthogonal scheme orthonormalizes its columns
    if (scheme == RandomScheme::orthogonal)
        payload.mixing = random_matrix(num_basis, c_out, scheme, rng).transpose();
    else
        payload.mixing = random_matrix(c_out, num_basis, scheme, rng);
    return payload;
}

Eigen::MatrixXd decomposed_forward(const FactorizedKernel& fk, const Eigen::VectorXd& x) {
    if (x.size() != fk.input_len)
        throw std::invalid_argument("decomposed_forward: input length mismatch");
    // stage 1: basis responses, stage 2: 1x1 mixing
    const Eigen::MatrixXd z =
        fk.basis * gather_windows(x, fk.kernel_len(), fk.stride, fk.padding, fk.output_len);
    return fk.mixing * z;
}

Eigen::VectorXd decomposed_adjoint(const FactorizedKernel& fk, const Eigen::MatrixXd& y) {
    if (y.rows() != fk.c_out() || y.cols() != fk.output_len)
        throw std::invalid_argument("decomposed_adjoint: output shape mismatch");
    const Eigen::MatrixXd z = fk.mixing.transpose() * y;
    Eigen::VectorXd x = Eigen::VectorXd::Zero(fk.input_len);
    scatter_windows_add(x, fk.basis.transpose() * z, fk.stride, fk.padding);
    return x;
}

CompressedModel compress_model(const SliceConvModel& model, FactorMethod method,
                               int max_basis, double residual_tol, RandomScheme scheme,
                               std::uint64_t seed) {
    CompressedModel out;
    out.setup = model.setup;
    out.method = method;
    out.max_basis = max_basis;

    for (std::size_t s = 0; s < model.slices.size(); ++s) {
        const SliceKernel& k = model.slices[s];
        FactorPayload payload;
        FactorizationReport report;
        switch (method) {
            case FactorMethod::omp:
                std::tie(payload, report) = omp_select_basis(k.weights, max_basis, residual_tol);
                break;
            case FactorMethod::svd:
                std::tie(payload, report) = svd_factorize(k.weights, max_basis);
                break;
            case FactorMethod::random: {
                payload = random_factorize(k.c_out(), k.kernel_len(), max_basis, scheme,
                                           derive_seed(seed, "slice", s));
                report.final_error =
                    factorization_error(k.weights, payload.basis, payload.mixing);
                report.compression_ratio =
                    (static_cast<double>(k.c_out()) * k.kernel_len()) /
                    (static_cast<double>(max_basis) * (k.kernel_len() + k.c_out()));
                break;
            }
        }

        FactorizedKernel fk;
        fk.slice_offset = k.slice_offset;
        fk.basis = std::move(payload.basis);
        fk.mixing = std::move(payload.mixing);
        fk.selected_rows = std::move(payload.selected_rows);
        fk.stride = k.stride;
        fk.padding = k.padding;
        fk.input_len = k.input_len;
        fk.output_len = k.output_len;
        fk.multiplicity = k.multiplicity;
        fk.method = method;
        fk.degenerate = payload.degenerate;

        out.params_before += std::int64_t(k.c_out()) * k.kernel_len();
        out.params_after += std::int64_t(fk.num_basis()) * (fk.kernel_len() + fk.c_out());
        out.slices.push_back(std::move(fk));
        out.reports.push_back(std::move(report));
    }
    return out;
}

Eigen::VectorXd CompressedOperator::forward(const Eigen::VectorXd& x) const {
    DataCube cube(model_->setup.num_samples, model_->setup.num_elements);
    for (const auto& fk : model_->slices)
        place_slice_symmetric(cube, fk.slice_offset, decomposed_forward(fk, x));
    return cube.values;
}

Eigen::VectorXd CompressedOperator::adjoint(const Eigen::VectorXd& y) const {
    DataCube cube(model_->setup.num_samples, model_->setup.num_elements);
    cube.values = y;
    Eigen::VectorXd out = Eigen::VectorXd::Zero(model_->image_size());
    for (const auto& fk : model_->slices)
        out += decomposed_adjoint(fk, extract_slice_sum(cube, fk.slice_offset));
    return out;
}

} // namespace echorec
