// SPDX-License-Identifier: Apache-2.0
//
// Independent reference computations the test suites check the library
// against. Everything here is deliberately written from the problem
// definition (geometry, matrix assembly, exhaustive loops) rather than
// through the library's own code paths.
#pragma once

#include <cmath>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "echorec/model.hpp"
#include "echorec/types.hpp"

namespace echorec::oracle {

/// Pulse-echo simulation by looping pairs x pixels x samples directly.
inline DataCube direct_simulate(const ImagingSetup& s, const ReflectivityMap& x) {
    DataCube cube(s.num_samples, s.num_elements);
    for (int tx = 0; tx < s.num_elements; ++tx) {
        for (int rx = 0; rx < s.num_elements; ++rx) {
            for (int col = 0; col < s.grid_nx; ++col) {
                for (int z = 0; z < s.grid_nz; ++z) {
                    const double a = x.at(z, col);
                    if (a == 0.0) continue;
                    const double px = s.grid_origin + col * s.grid_pitch_x;
                    const double pz = (z + 1) * s.grid_pitch_z;
                    const double d_tx = std::sqrt((px - tx * s.element_pitch) *
                                                      (px - tx * s.element_pitch) +
                                                  pz * pz);
                    const double d_rx = std::sqrt((px - rx * s.element_pitch) *
                                                      (px - rx * s.element_pitch) +
                                                  pz * pz);
                    const double delay = (d_tx + d_rx) / s.sound_speed;
                    for (int t = 0; t < s.num_samples; ++t) {
                        const double dt = t / s.sampling_rate - delay;
                        cube.at(t, rx, tx) +=
                            a * std::exp(-dt * dt / (2.0 * s.pulse_sigma * s.pulse_sigma)) *
                            std::cos(2.0 * M_PI * s.pulse_center_freq * dt);
                    }
                }
            }
        }
    }
    return cube;
}

/// Round-trip delay from raw geometry (no library calls).
inline double geometric_delay(const ImagingSetup& s, int z, int col, int tx, int rx) {
    const double px = s.grid_origin + col * s.grid_pitch_x;
    const double pz = (z + 1) * s.grid_pitch_z;
    const double d1 = std::hypot(px - tx * s.element_pitch, pz);
    const double d2 = std::hypot(px - rx * s.element_pitch, pz);
    return (d1 + d2) / s.sound_speed;
}

// Explicit banded-matrix assembly of the strided convolution:
// row (i + c_out * tau), column j carries w(i, k) where k = tau*S - j + P.
inline Eigen::MatrixXd toeplitz_assemble(const Eigen::MatrixXd& w, int stride,
                                         int padding, int input_len, int output_len) {
    const auto c_out = static_cast<int>(w.rows());
    const auto klen = static_cast<int>(w.cols());
    Eigen::MatrixXd t = Eigen::MatrixXd::Zero(std::int64_t(c_out) * output_len, input_len);
    for (int tau = 0; tau < output_len; ++tau)
        for (int j = 0; j < input_len; ++j) {
            const int k = tau * stride - j + padding;
            if (k < 0 || k >= klen) continue;
            for (int i = 0; i < c_out; ++i) t(i + std::int64_t(c_out) * tau, j) = w(i, k);
        }
    return t;
}

/// Largest eigenvalue of A^T A through a full dense eigensolve.
inline double spectral_gram_max(const Eigen::MatrixXd& a) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a.transpose() * a);
    return es.eigenvalues().maxCoeff();
}

/// Moore-Penrose pseudo-inverse via SVD (the paper-literal mixing route).
inline Eigen::MatrixXd pinv(const Eigen::MatrixXd& m, double rcond = 1e-13) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    const double cutoff = rcond * (sv.size() ? sv[0] : 0.0);
    Eigen::VectorXd inv = Eigen::VectorXd::Zero(sv.size());
    for (Eigen::Index i = 0; i < sv.size(); ++i)
        if (sv[i] > cutoff) inv[i] = 1.0 / sv[i];
    return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

struct OmpReplayStep {
    int selected = -1;
    double residual_norm = 0.0;
};

// Step-by-step greedy replay with exhaustive correlation-energy loops and
// the closed-form mixing C = W B^T (B B^T)^-1.
inline std::vector<OmpReplayStep> omp_replay(const Eigen::MatrixXd& w, int max_basis,
                                             double residual_tol) {
    std::vector<OmpReplayStep> steps;
    std::vector<int> selected;
    Eigen::MatrixXd residual = w;
    while (static_cast<int>(selected.size()) < max_basis &&
           residual.norm() > residual_tol) {
        int best = -1;
        double best_energy = -1.0;
        for (int j = 0; j < w.rows(); ++j) {
            bool used = false;
            for (int s : selected) used = used || (s == j);
            if (used) continue;
            double energy = 0.0;
            for (int i = 0; i < w.rows(); ++i) {
                double dot = 0.0;
                for (int k = 0; k < w.cols(); ++k) dot += residual(i, k) * w(j, k);
                energy += dot * dot;
            }
            if (energy > best_energy) {
                best_energy = energy;
                best = j;
            }
        }
        if (best < 0) break;
        selected.push_back(best);
        Eigen::MatrixXd b(selected.size(), w.cols());
        for (std::size_t i = 0; i < selected.size(); ++i) b.row(i) = w.row(selected[i]);
        const Eigen::MatrixXd c = w * b.transpose() * pinv(b * b.transpose());
        residual = w - c * b;
        steps.push_back({best, residual.norm()});
    }
    return steps;
}

} // namespace echorec::oracle
