// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "echorec/linop.hpp"
#include "echorec/types.hpp"

namespace echorec {

// One diagonal slice of the measurement operator as a strided 1-D
// convolution: y[i, tau] = sum_k W(i, k) * x[tau * stride - k + padding],
// reads outside [0, input_len) are zero.
struct SliceKernel {
    int slice_offset = 0;     ///< transmitter-receiver offset d
    Eigen::MatrixXd weights;  ///< C_out x K
    int stride = 1;
    int padding = 0;
    int input_len = 0;
    int output_len = 0;
    int multiplicity = 1;     ///< 1 for d = 0, else 2 (reciprocity)

    int c_out() const { return static_cast<int>(weights.rows()); }
    int kernel_len() const { return static_cast<int>(weights.cols()); }
};

// Full measurement operator: one unique slice per offset d = 0..N_c-1;
// the symmetric slices +-d share a kernel via multiplicity.
struct SliceConvModel {
    ImagingSetup setup;
    std::vector<SliceKernel> slices;

    int data_size() const { return setup.cube_size(); }
    int image_size() const { return setup.num_pixels(); }
};

/// Gaussian-modulated cosine pulse, unit amplitude.
double gaussian_pulse(const ImagingSetup& setup, double t);

// Round-trip delay (seconds) for the pair at slice offset d and a pixel at
// depth row z and lateral column offset `rel` from the pair's first
// element (rel = pixel_column - r * q). Pixel row z sits at depth
// (z + 1) * grid_pitch_z.
double pair_delay(const ImagingSetup& setup, int z, int rel, int d);

// Builds the analytic slice kernels for a setup. Stride is q * grid_nz
// (one output step per transducer pair; q = 1 makes it one step per
// lateral pixel column), padding centers the kernel support so column 0
// aligns under pair position 0, K covers the full lateral extent a slice
// can reach. Throws std::invalid_argument for setups with a pixel whose
// round-trip delay exceeds the recording window for every pair.
SliceConvModel build_slice_kernels(const ImagingSetup& setup);

/// Strided convolution of Eq.-style indexing above. x must have input_len entries.
Eigen::MatrixXd slice_forward(const SliceKernel& kernel, const Eigen::VectorXd& x);

/// Exact adjoint of slice_forward. y must be c_out x output_len.
Eigen::VectorXd slice_adjoint(const SliceKernel& kernel, const Eigen::MatrixXd& y);

/// Runs every unique slice and places its output at (t, r, r+d) and (t, r+d, r).
DataCube forward_apply(const SliceConvModel& model, const ReflectivityMap& x);

/// Exact adjoint of forward_apply (slice adjoints accumulated with multiplicity).
ReflectivityMap adjoint_apply(const SliceConvModel& model, const DataCube& y);

inline constexpr std::uint64_t kDefaultDenseCapBytes = 1ULL << 30;

// Materializes the operator column by column; test oracle and MLP
// initializer, desk scale only. Throws when rows*cols*8 exceeds the cap.
Eigen::MatrixXd dense_operator(const SliceConvModel& model,
                               std::uint64_t cap_bytes = kDefaultDenseCapBytes);

/// Matrix-free LinearOperator view over a SliceConvModel.
class ModelOperator final : public LinearOperator {
public:
    explicit ModelOperator(const SliceConvModel& model) : model_(&model) {}
    Eigen::Index rows() const override { return model_->data_size(); }
    Eigen::Index cols() const override { return model_->image_size(); }
    Eigen::VectorXd forward(const Eigen::VectorXd& x) const override;
    Eigen::VectorXd adjoint(const Eigen::VectorXd& y) const override;
    const SliceConvModel& model() const { return *model_; }

private:
    const SliceConvModel* model_;
};

// Window gather/scatter shared by the slice and decomposed paths.
// gather_windows(x)(k, tau) = x[tau * stride - k + padding] (zero outside);
// scatter_windows_add is its exact adjoint, accumulating into x.
Eigen::MatrixXd gather_windows(const Eigen::VectorXd& x, int kernel_len, int stride,
                               int padding, int output_len);
void scatter_windows_add(Eigen::VectorXd& x, const Eigen::MatrixXd& g, int stride,
                         int padding);

/// Slice view of a cube: out(i, r) = Y(i, r, r+d) + (d > 0 ? Y(i, r+d, r) : 0).
Eigen::MatrixXd extract_slice_sum(const DataCube& y, int d);

/// Writes s into cube positions (i, r, r+d) and, for d > 0, (i, r+d, r).
void place_slice_symmetric(DataCube& y, int d, const Eigen::MatrixXd& s);

} // namespace echorec
