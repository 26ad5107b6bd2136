// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string_view>

namespace echorec {

// Deterministic splitmix64 generator. All randomness in the library flows
// through this class so that results are reproducible from a single seed
// independent of the platform's std:: distribution implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64();

    /// Uniform double in [0, 1).
    double uniform();

    /// Uniform double in [lo, hi).
    double uniform(double lo, double hi);

    /// Uniform integer in [lo, hi], inclusive, unbiased.
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);

    /// Normal(mean, stddev) via Box-Muller (pairs cached).
    double normal(double mean = 0.0, double stddev = 1.0);

private:
    std::uint64_t state_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

// Counter-based stream derivation: one top-level seed expands into
// independent per-purpose streams. The child seed is the splitmix64
// finalizer applied to (master, fnv1a(purpose), index).
std::uint64_t derive_seed(std::uint64_t master, std::string_view purpose,
                          std::uint64_t index = 0);

/// FNV-1a 64-bit hash (also used for artifact content hashes in manifests).
std::uint64_t fnv1a64(const void* data, std::size_t len);

} // namespace echorec
