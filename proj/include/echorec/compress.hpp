// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "echorec/model.hpp"

namespace echorec {

enum class FactorMethod { omp, svd, random };
enum class RandomScheme { xavier, kaiming, orthogonal };

std::string to_string(FactorMethod m);
FactorMethod factor_method_from_string(const std::string& s);
std::string to_string(RandomScheme s);
RandomScheme random_scheme_from_string(const std::string& s);

// Low-rank replacement for one SliceKernel: W ~= mixing * basis, applied
// as a basis convolution followed by a 1x1 channel mix.
struct FactorizedKernel {
    int slice_offset = 0;
    Eigen::MatrixXd basis;          ///< M x K
    Eigen::MatrixXd mixing;         ///< C_out x M
    std::vector<int> selected_rows; ///< source rows of basis (omp only)
    int stride = 1;
    int padding = 0;
    int input_len = 0;
    int output_len = 0;
    int multiplicity = 1;
    FactorMethod method = FactorMethod::omp;
    bool degenerate = false;        ///< basis lost full row rank

    int c_out() const { return static_cast<int>(mixing.rows()); }
    int num_basis() const { return static_cast<int>(basis.rows()); }
    int kernel_len() const { return static_cast<int>(basis.cols()); }
};

struct FactorizationReport {
    std::vector<double> residual_history; ///< ||W - CB||_F after each selection
    double final_error = 0.0;
    double compression_ratio = 0.0;       ///< (C_out*K) / (M*(K + C_out))
    bool used_pseudo_inverse = false;
    std::string note;
};

// Factor matrices without slice metadata; compress_model attaches the rest.
struct FactorPayload {
    Eigen::MatrixXd basis;
    Eigen::MatrixXd mixing;
    std::vector<int> selected_rows;
    bool degenerate = false;
};

/// ||W - C B||_F.
double factorization_error(const Eigen::MatrixXd& w, const Eigen::MatrixXd& b,
                           const Eigen::MatrixXd& c);

// Least-squares mixing matrix argmin_C ||W - C B||_F via a rank-revealing
// solve (pseudo-inverse when B B^T is rank deficient; *rank_deficient is
// set when provided).
Eigen::MatrixXd least_squares_mixing(const Eigen::MatrixXd& w, const Eigen::MatrixXd& b,
                                     bool* rank_deficient = nullptr);

// Greedy row selection: pick the unselected row of W with the largest
// correlation energy against the residual, refit the mixing, recompute the
// residual; stop at max_basis rows or when ||R||_F <= residual_tol. Rows
// already inside the selected span (projection residual below
// 1e-12 * ||W||_F) are skipped. Ties break toward the lowest row index.
std::pair<FactorPayload, FactorizationReport>
omp_select_basis(const Eigen::MatrixXd& w, int max_basis, double residual_tol);

// Truncated SVD factorization: basis rows are the top right-singular
// vectors (unit energy), singular values absorbed into the mixing.
std::pair<FactorPayload, FactorizationReport>
svd_factorize(const Eigen::MatrixXd& w, int num_basis);

/// Seed-deterministic random factor pair of the given shapes.
FactorPayload random_factorize(int c_out, int kernel_len, int num_basis,
                               RandomScheme scheme, std::uint64_t seed);

/// Basis responses then 1x1 mixing; equals slice_forward with weights C*B.
Eigen::MatrixXd decomposed_forward(const FactorizedKernel& fk, const Eigen::VectorXd& x);

/// Exact adjoint of decomposed_forward (mix transpose, then transposed conv).
Eigen::VectorXd decomposed_adjoint(const FactorizedKernel& fk, const Eigen::MatrixXd& y);

struct CompressedModel {
    ImagingSetup setup;
    std::vector<FactorizedKernel> slices;
    std::vector<FactorizationReport> reports;
    FactorMethod method = FactorMethod::omp;
    int max_basis = 0;
    std::int64_t params_before = 0; ///< sum over slices of C_out * K
    std::int64_t params_after = 0;  ///< sum over slices of M * (K + C_out)

    int data_size() const { return setup.cube_size(); }
    int image_size() const { return setup.num_pixels(); }
};

/// Default per-slice residual tolerance: 1e-6 * ||W||_F. Negative `tol` selects it.
inline constexpr double kResidualTolScale = 1e-6;

/// Factorizes every unique slice independently with the chosen method.
CompressedModel compress_model(const SliceConvModel& model, FactorMethod method,
                               int max_basis, double residual_tol = -1.0,
                               RandomScheme scheme = RandomScheme::xavier,
                               std::uint64_t seed = 0);

/// Matrix-free LinearOperator view over a CompressedModel.
class CompressedOperator final : public LinearOperator {
public:
    explicit CompressedOperator(const CompressedModel& model) : model_(&model) {}
    Eigen::Index rows() const override { return model_->data_size(); }
    Eigen::Index cols() const override { return model_->image_size(); }
    Eigen::VectorXd forward(const Eigen::VectorXd& x) const override;
    Eigen::VectorXd adjoint(const Eigen::VectorXd& y) const override;
    const CompressedModel& model() const { return *model_; }

private:
    const CompressedModel* model_;
};

} // namespace echorec
