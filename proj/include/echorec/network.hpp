// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "echorec/compress.hpp"
#include "echorec/model.hpp"

namespace echorec {

enum class Arch { mlp, alista, bc, cbc };

std::string to_string(Arch a);
Arch arch_from_string(const std::string& s);

enum class InitKind { analytic, xavier, kaiming, orthogonal };

std::string to_string(InitKind k);
InitKind init_kind_from_string(const std::string& s);

struct InitSpec {
    InitKind kind = InitKind::analytic;
    std::uint64_t seed = 0; ///< for the random kinds
};

struct ParamGroupFlags {
    bool forward_kernels = true;
    bool transposed_kernels = true;
    bool thresholds = true;
};

/// Geometry of one slice operator, shared by both parameter paths.
struct SliceMeta {
    int slice_offset = 0;
    int c_out = 0;
    int kernel_len = 0;
    int num_basis = 0; ///< cbc only
    int stride = 1;
    int padding = 0;
    int input_len = 0;
    int output_len = 0;
    int multiplicity = 1;
};

struct CbcSlice {
    Eigen::MatrixXd basis;  ///< M x K
    Eigen::MatrixXd mixing; ///< C_out x M
};

// Unrolled proximal-gradient network. One block computes
//   x_k = S_{theta_k}(x_{k-1} - step_scale * B_op(F_op(x_{k-1}) - y))
// where F_op / B_op are the architecture's forward / transposed operators
// (mlp uses the dense form S_{theta_k}(W1 x_{k-1} + W2 y) with the step
// folded into W1/W2). Forward and transposed paths are independent
// tensors, equal at analytic init; with share_kernels one parameter set
// serves every block, otherwise each block owns a copy.
struct UnrolledNet {
    Arch arch = Arch::cbc;
    int num_blocks = 0;
    bool share_kernels = true;
    ParamGroupFlags trainable;
    double step_scale = 1.0; ///< 1/L at init; fixed
    Eigen::VectorXd thresholds;

    // init provenance
    InitKind init = InitKind::analytic;
    std::uint64_t init_seed = 0;
    double init_lambda = 0.0;
    double init_lipschitz = 0.0;

    // geometry
    int ns = 0, nd = 0;
    int nz = 0, nx = 0;
    int nt = 0, nc = 0;
    std::vector<SliceMeta> meta;

    // parameter sets, outer index = block set (size 1 when shared)
    std::vector<Eigen::MatrixXd> w1, w2;                       // mlp
    std::vector<std::vector<Eigen::MatrixXd>> fwd_banks, bwd_banks; // alista, bc
    std::vector<std::vector<CbcSlice>> fwd_factors, bwd_factors;    // cbc

    int num_sets() const { return share_kernels ? 1 : num_blocks; }
    int set_for_block(int k) const { return share_kernels ? 0 : k; }
};

// Gradients mirror the trainable parameter groups; frozen groups keep
// empty containers.
struct GradSet {
    Eigen::VectorXd d_thresholds;
    std::vector<Eigen::MatrixXd> d_w1, d_w2;
    std::vector<std::vector<Eigen::MatrixXd>> d_fwd_banks, d_bwd_banks;
    std::vector<std::vector<CbcSlice>> d_fwd_factors, d_bwd_factors;
};

GradSet make_zero_grads(const UnrolledNet& net);

// Per-block pre/post activations plus the data vector, retained for
// reverse-mode gradient computation.
struct ForwardTrace {
    std::vector<Eigen::VectorXd> pre;
    std::vector<Eigen::VectorXd> post;
    Eigen::VectorXd y;
};

// Analytic construction from the full model (mlp, alista, bc). mlp
// materializes W1 = I - (1/L) A^T A and W2 = (1/L) A^T through
// dense_operator and is therefore subject to its memory cap.
UnrolledNet build_network(Arch arch, int num_blocks, const SliceConvModel& model,
                          double lambda, double lipschitz,
                          ParamGroupFlags trainable = {}, bool share_kernels = true,
                          InitSpec init = {},
                          std::uint64_t dense_cap_bytes = kDefaultDenseCapBytes);

/// Analytic construction from a compressed model (cbc).
UnrolledNet build_network(Arch arch, int num_blocks, const CompressedModel& compressed,
                          double lambda, double lipschitz,
                          ParamGroupFlags trainable = {}, bool share_kernels = true,
                          InitSpec init = {});

/// x_hat from data vector y (flattened cube); trace retained on request.
Eigen::VectorXd network_forward(const UnrolledNet& net, const Eigen::VectorXd& y,
                                ForwardTrace* trace = nullptr);

// Reverse-mode gradients of MSE(x_hat, x_true) with respect to every
// trainable parameter. Soft-threshold subgradient at the kink is 0;
// shared kernels accumulate across blocks.
GradSet network_backward(const UnrolledNet& net, const ForwardTrace& trace,
                         const Eigen::VectorXd& x_true);

// Flat views over the trainable scalars, in a fixed order shared with
// grad_views; backbone for the optimizer, parameter counting, and the
// finite-difference check.
struct ParamView {
    double* data = nullptr;
    Eigen::Index size = 0;
};
std::vector<ParamView> trainable_params(UnrolledNet& net);
std::vector<ParamView> grad_views(GradSet& grads, const UnrolledNet& net);
std::int64_t count_trainable(const UnrolledNet& net);

struct GradCheckResult {
    double max_rel_deviation = 0.0;
    std::int64_t checked = 0;
    bool vacuous = false; ///< no trainable parameters
};

// Central-difference verification of network_backward on one (y, x_true)
// sample. Above `max_checked` scalars a seeded random subset is used.
GradCheckResult gradient_check(UnrolledNet& net, const Eigen::VectorXd& y,
                               const Eigen::VectorXd& x_true, double h = 1e-6,
                               std::int64_t max_checked = 4096,
                               std::uint64_t seed = 0);

} // namespace echorec
