// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "echorec/common.hpp"
#include "echorec/train.hpp"
#include "echorec/types.hpp"

namespace echorec {

// Flat sectioned key/value configuration:
//   [section]
//   key = value        # comment
// Keys are addressed as "section.key". Unknown keys are tolerated; type
// errors carry file and line context.
class Config {
public:
    static Config parse_file(const std::string& path);
    static Config parse_string(const std::string& text,
                               const std::string& origin = "<string>");

    bool has(const std::string& key) const;
    std::string get_str(const std::string& key) const;
    std::string get_str(const std::string& key, const std::string& fallback) const;
    double get_double(const std::string& key) const;
    double get_double(const std::string& key, double fallback) const;
    int get_int(const std::string& key) const;
    int get_int(const std::string& key, int fallback) const;
    std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;
    /// Comma-separated list value.
    std::vector<std::string> get_list(const std::string& key) const;

    const std::map<std::string, std::string>& entries() const { return entries_; }

private:
    std::map<std::string, std::string> entries_;
    std::map<std::string, int> lines_;
    std::string origin_;

    [[noreturn]] void fail(const std::string& key, const std::string& what) const;
};

/// [setup] section -> validated ImagingSetup.
ImagingSetup setup_from_config(const Config& cfg);

/// [train] section -> TrainConfig; "snr_db = noiseless" clears the SNR.
TrainConfig train_config_from(const Config& cfg);

} // namespace echorec
