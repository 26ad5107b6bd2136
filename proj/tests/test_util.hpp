// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>

#include "echorec/rng.hpp"
#include "echorec/types.hpp"

namespace echorec::testutil {

/// Desk-scale acquisition: N_c = 4, 16x16 grid, N_t = 64.
inline ImagingSetup desk_setup() {
    ImagingSetup s;
    s.num_elements = 4;
    s.element_pitch = 2.0e-4;
    s.grid_nz = 16;
    s.grid_nx = 16;
    s.grid_pitch_z = 3.85e-5;
    s.grid_pitch_x = 2.0e-4;
    s.grid_origin = -1.2e-3; // grid centered on the array
    s.sound_speed = 1540.0;
    s.sampling_rate = 2.0e7;
    s.pulse_center_freq = 5.0e6;
    s.pulse_sigma = 2.0e-7;
    s.num_samples = 64;
    return s;
}

/// Smaller variant for training-speed tests: N_c = 4, 8x8 grid, N_t = 32.
inline ImagingSetup mini_setup() {
    ImagingSetup s = desk_setup();
    s.grid_nz = 8;
    s.grid_nx = 8;
    s.grid_origin = -4.0e-4;
    s.num_samples = 32;
    return s;
}

/// Gradient-check scale: N_c = 2, 3x3 grid (N_s = 9), N_t = 16.
inline ImagingSetup tiny_setup() {
    ImagingSetup s = desk_setup();
    s.num_elements = 2;
    s.grid_nz = 3;
    s.grid_nx = 3;
    s.grid_origin = -1.0e-4;
    s.num_samples = 16;
    return s;
}

inline Eigen::VectorXd random_vector(Rng& rng, Eigen::Index n, double scale = 1.0) {
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = scale * rng.normal();
    return v;
}

inline Eigen::MatrixXd random_matrix(Rng& rng, Eigen::Index r, Eigen::Index c,
                                     double scale = 1.0) {
    Eigen::MatrixXd m(r, c);
    for (Eigen::Index j = 0; j < c; ++j)
        for (Eigen::Index i = 0; i < r; ++i) m(i, j) = scale * rng.normal();
    return m;
}

inline ReflectivityMap random_map(Rng& rng, int nz, int nx, double scale = 1.0) {
    ReflectivityMap m(nz, nx);
    m.values = random_vector(rng, m.values.size(), scale);
    return m;
}

} // namespace echorec::testutil
