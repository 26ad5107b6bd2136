// SPDX-License-Identifier: Apache-2.0
#include "echorec/model.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "echorec/rng.hpp"

namespace echorec {

double gaussian_pulse(const ImagingSetup& setup, double t) {
    const double s = setup.pulse_sigma;
    return std::exp(-t * t / (2.0 * s * s)) *
           std::cos(2.0 * M_PI * setup.pulse_center_freq * t);
}

double pair_delay(const ImagingSetup& setup, int z, int rel, int d) {
    const double depth = (z + 1) * setup.grid_pitch_z;
    const double u_tx = setup.grid_origin + rel * setup.grid_pitch_x;
    const double u_rx = u_tx - d * setup.element_pitch;
    return (std::hypot(u_tx, depth) + std::hypot(u_rx, depth)) / setup.sound_speed;
}

SliceConvModel build_slice_kernels(const ImagingSetup& setup) {
    setup.validate();
    const int q = setup.lateral_ratio();
    const int nc = setup.num_elements;
    const int nz = setup.grid_nz;
    const int nx = setup.grid_nx;
    const int nt = setup.num_samples;
    const double fs = setup.sampling_rate;
    const double window = nt / fs;

    // Every pixel must fall inside the recording window for at least one pair.
    for (int col = 0; col < nx; ++col) {
        for (int z = 0; z < nz; ++z) {
            double min_delay = std::numeric_limits<double>::infinity();
            for (int d = 0; d < nc; ++d)
                for (int r = 0; r + d < nc; ++r)
                    min_delay = std::min(min_delay, pair_delay(setup, z, col - r * q, d));
            if (min_delay > window)
                throw std::invalid_argument(
                    "pixel (" + std::to_string(z) + "," + std::to_string(col) +
                    ") lies outside the recording window for every pair");
        }
    }

    SliceConvModel model;
    model.setup = setup;
    model.slices.reserve(nc);
    const int padding = nx * nz - 1;

    for (int d = 0; d < nc; ++d) {
        SliceKernel k;
        k.slice_offset = d;
        k.stride = q * nz;
        k.padding = padding;
        k.input_len = nz * nx;
        k.output_len = nc - d;
        k.multiplicity = (d == 0) ? 1 : 2;

        const int rel_min = -(nc - 1 - d) * q;
        const int rel_max = nx - 1;
        const int kernel_len = padding - rel_min * nz + 1;
        k.weights = Eigen::MatrixXd::Zero(nt, kernel_len);

        for (int rel = rel_min; rel <= rel_max; ++rel) {
            for (int z = 0; z < nz; ++z) {
                const int tap = padding - rel * nz - z;
                const double tau = pair_delay(setup, z, rel, d);
                for (int i = 0; i < nt; ++i)
                    k.weights(i, tap) = gaussian_pulse(setup, i / fs - tau);
            }
        }
        model.slices.push_back(std::move(k));
    }
    return model;
}

Eigen::MatrixXd gather_windows(const Eigen::VectorXd& x, int kernel_len, int stride,
                               int padding, int output_len) {
    Eigen::MatrixXd g = Eigen::MatrixXd::Zero(kernel_len, output_len);
    const auto n = static_cast<int>(x.size());
    for (int tau = 0; tau < output_len; ++tau) {
        const int base = tau * stride + padding;
        const int k_lo = std::max(0, base - (n - 1));
        const int k_hi = std::min(kernel_len - 1, base);
        for (int k = k_lo; k <= k_hi; ++k) g(k, tau) = x[base - k];
    }
    return g;
}

void scatter_windows_add(Eigen::VectorXd& x, const Eigen::MatrixXd& g, int stride,
                         int padding) {
    const auto n = static_cast<int>(x.size());
    const auto kernel_len = static_cast<int>(g.rows());
    const auto output_len = static_cast<int>(g.cols());
    for (int tau = 0; tau < output_len; ++tau) {
        const int base = tau * stride + padding;
        const int k_lo = std::max(0, base - (n - 1));
        const int k_hi = std::min(kernel_len - 1, base);
        for (int k = k_lo; k <= k_hi; ++k) x[base - k] += g(k, tau);
    }
}

Eigen::MatrixXd slice_forward(const SliceKernel& kernel, const Eigen::VectorXd& x) {
    if (x.size() != kernel.input_len)
        throw std::invalid_argument("slice_forward: input length " +
                                    std::to_string(x.size()) + " != " +
                                    std::to_string(kernel.input_len));
    return kernel.weights * gather_windows(x, kernel.kernel_len(), kernel.stride,
                                           kernel.padding, kernel.output_len);
}

Eigen::VectorXd slice_adjoint(const SliceKernel& kernel, const Eigen::MatrixXd& y) {
    if (y.rows() != kernel.c_out() || y.cols() != kernel.output_len)
        throw std::invalid_argument("slice_adjoint: output shape mismatch");
    Eigen::VectorXd x = Eigen::VectorXd::Zero(kernel.input_len);
    scatter_windows_add(x, kernel.weights.transpose() * y, kernel.stride, kernel.padding);
    return x;
}

Eigen::MatrixXd extract_slice_sum(const DataCube& y, int d) {
    const int pairs = y.nc - d;
    Eigen::MatrixXd out(y.nt, pairs);
    for (int r = 0; r < pairs; ++r)
        for (int t = 0; t < y.nt; ++t)
            out(t, r) = y.at(t, r, r + d) + (d > 0 ? y.at(t, r + d, r) : 0.0);
    return out;
}

void place_slice_symmetric(DataCube& y, int d, const Eigen::MatrixXd& s) {
    for (int r = 0; r < static_cast<int>(s.cols()); ++r)
        for (int t = 0; t < y.nt; ++t) {
            y.at(t, r, r + d) += s(t, r);
            if (d > 0) y.at(t, r + d, r) += s(t, r);
        }
}

DataCube forward_apply(const SliceConvModel& model, const ReflectivityMap& x) {
    const auto& s = model.setup;
    if (x.nz != s.grid_nz || x.nx != s.grid_nx)
        throw std::invalid_argument("forward_apply: map dims mismatch");
    DataCube cube(s.num_samples, s.num_elements);
    for (const auto& k : model.slices)
        place_slice_symmetric(cube, k.slice_offset, slice_forward(k, x.values));
    return cube;
}

ReflectivityMap adjoint_apply(const SliceConvModel& model, const DataCube& y) {
    const auto& s = model.setup;
    if (y.nt != s.num_samples || y.nc != s.num_elements)
        throw std::invalid_argument("adjoint_apply: cube dims mismatch");
    ReflectivityMap out(s.grid_nz, s.grid_nx);
    for (const auto& k : model.slices)
        out.values += slice_adjoint(k, extract_slice_sum(y, k.slice_offset));
    return out;
}

Eigen::MatrixXd dense_operator(const SliceConvModel& model, std::uint64_t cap_bytes) {
    const auto rows = static_cast<std::uint64_t>(model.data_size());
    const auto cols = static_cast<std::uint64_t>(model.image_size());
    if (rows * cols * sizeof(double) > cap_bytes)
        throw std::invalid_argument(
            "dense_operator: " + std::to_string(rows * cols * sizeof(double)) +
            " bytes exceeds cap " + std::to_string(cap_bytes));
    Eigen::MatrixXd a(rows, cols);
    ReflectivityMap e(model.setup.grid_nz, model.setup.grid_nx);
    for (std::uint64_t j = 0; j < cols; ++j) {
        e.values.setZero();
        e.values[static_cast<Eigen::Index>(j)] = 1.0;
        a.col(static_cast<Eigen::Index>(j)) = forward_apply(model, e).values;
    }
    return a;
}

Eigen::VectorXd ModelOperator::forward(const Eigen::VectorXd& x) const {
    ReflectivityMap m(model_->setup.grid_nz, model_->setup.grid_nx);
    m.values = x;
    return forward_apply(*model_, m).values;
}

Eigen::VectorXd ModelOperator::adjoint(const Eigen::VectorXd& y) const {
    DataCube cube(model_->setup.num_samples, model_->setup.num_elements);
    cube.values = y;
    return adjoint_apply(*model_, cube).values;
}

LipschitzEstimate estimate_lipschitz(const LinearOperator& op, int max_iters,
                                     double tol, std::uint64_t seed) {
    if (max_iters < 1) throw std::invalid_argument("estimate_lipschitz: max_iters >= 1");
    Rng rng(seed);
    Eigen::VectorXd v(op.cols());
    for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = rng.normal();
    double norm = v.norm();
    if (norm == 0.0) {
        v.setOnes();
        norm = v.norm();
    }
    v /= norm;

    LipschitzEstimate est;
    double prev = 0.0;
    for (int it = 1; it <= max_iters; ++it) {
        Eigen::VectorXd w = op.adjoint(op.forward(v));
        const double rayleigh = v.dot(w);
        est.iterations = it;
        const double wn = w.norm();
        if (wn == 0.0) {
            // operator annihilates the iterate: spectral estimate is 0
            est.value = 0.0;
            est.converged = true;
            return est;
        }
        v = w / wn;
        est.value = 1.01 * rayleigh;
        if (it > 1 && std::abs(rayleigh - prev) <= tol * std::abs(rayleigh)) {
            est.converged = true;
            return est;
        }
        prev = rayleigh;
    }
    est.converged = false;
    return est;
}

} // namespace echorec
