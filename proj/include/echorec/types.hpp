// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>

namespace echorec {

// Physical description of one full-matrix-capture acquisition: a uniform
// linear array over a rectangular pixel grid, Gaussian-modulated pulse,
// fixed sampling window.
struct ImagingSetup {
    int num_elements = 0;          ///< N_c
    double element_pitch = 0.0;    ///< meters
    int grid_nz = 0;               ///< pixel rows (depth)
    int grid_nx = 0;               ///< pixel columns (lateral)
    double grid_pitch_z = 0.0;     ///< meters
    double grid_pitch_x = 0.0;     ///< meters
    double grid_origin = 0.0;      ///< lateral position of pixel column 0 relative to element 0, meters
    double sound_speed = 0.0;      ///< m/s
    double sampling_rate = 0.0;    ///< Hz
    double pulse_center_freq = 0.0;///< Hz
    double pulse_sigma = 0.0;      ///< seconds (Gaussian envelope)
    int num_samples = 0;           ///< N_t

    int num_pixels() const { return grid_nz * grid_nx; }
    int cube_size() const { return num_samples * num_elements * num_elements; }

    /// q = element_pitch / grid_pitch_x; must be a positive integer
    /// (lateral shift-invariance prerequisite). Throws otherwise.
    int lateral_ratio() const;

    /// Validates all field invariants; throws std::invalid_argument.
    void validate() const;

    bool operator==(const ImagingSetup&) const = default;
};

// Sparse reflectivity map. Vectorization is fixed z-fastest:
// pixel (z, col) lives at flat index col * nz + z.
struct ReflectivityMap {
    int nz = 0;
    int nx = 0;
    Eigen::VectorXd values;

    ReflectivityMap() = default;
    ReflectivityMap(int nz_, int nx_)
        : nz(nz_), nx(nx_), values(Eigen::VectorXd::Zero(std::int64_t(nz_) * nx_)) {}

    double& at(int z, int col) { return values[std::int64_t(col) * nz + z]; }
    double at(int z, int col) const { return values[std::int64_t(col) * nz + z]; }
    int size() const { return nz * nx; }
};

// Recorded data cube, axes [samples, receivers, transmitters].
// Flat layout: (t, rx, tx) -> t + nt * (rx + nc * tx).
struct DataCube {
    int nt = 0;
    int nc = 0;
    Eigen::VectorXd values;

    DataCube() = default;
    DataCube(int nt_, int nc_)
        : nt(nt_), nc(nc_),
          values(Eigen::VectorXd::Zero(std::int64_t(nt_) * nc_ * nc_)) {}

    double& at(int t, int rx, int tx) {
        return values[t + std::int64_t(nt) * (rx + std::int64_t(nc) * tx)];
    }
    double at(int t, int rx, int tx) const {
        return values[t + std::int64_t(nt) * (rx + std::int64_t(nc) * tx)];
    }
    int size() const { return nt * nc * nc; }
};

} // namespace echorec
