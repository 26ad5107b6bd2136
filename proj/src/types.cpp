// SPDX-License-Identifier: Apache-2.0
#include "echorec/types.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace echorec {

int ImagingSetup::lateral_ratio() const {
    if (grid_pitch_x <= 0.0 || element_pitch <= 0.0)
        throw std::invalid_argument("lateral_ratio: pitches must be positive");
    const double ratio = element_pitch / grid_pitch_x;
    const double rounded = std::round(ratio);
    if (rounded < 1.0 || std::abs(ratio - rounded) > 1e-9 * ratio)
        throw std::invalid_argument(
            "element_pitch / grid_pitch_x = " + std::to_string(ratio) +
            " is not a positive integer");
    return static_cast<int>(rounded);
}

void ImagingSetup::validate() const {
    if (num_elements < 1) throw std::invalid_argument("num_elements must be >= 1");
    if (grid_nz < 1 || grid_nx < 1) throw std::invalid_argument("grid dims must be >= 1");
    if (num_samples < 1) throw std::invalid_argument("num_samples must be >= 1");
    auto positive = [](double v, const char* name) {
        if (!(v > 0.0))
            throw std::invalid_argument(std::string(name) + " must be strictly positive");
    };
    positive(element_pitch, "element_pitch");
    positive(grid_pitch_z, "grid_pitch_z");
    positive(grid_pitch_x, "grid_pitch_x");
    positive(sound_speed, "sound_speed");
    positive(sampling_rate, "sampling_rate");
    positive(pulse_center_freq, "pulse_center_freq");
    positive(pulse_sigma, "pulse_sigma");
    if (!std::isfinite(grid_origin)) throw std::invalid_argument("grid_origin must be finite");
    (void)lateral_ratio();
}

} // namespace echorec
