// SPDX-License-Identifier: Apache-2.0
#include "echorec/config.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

namespace echorec {

namespace {

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

} // namespace

Config Config::parse_string(const std::string& text, const std::string& origin) {
    Config cfg;
    cfg.origin_ = origin;
    std::istringstream in(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError(origin + ":" + std::to_string(lineno) +
                                  ": unterminated section header");
            section = trim(line.substr(1, line.size() - 2));
            if (section.empty())
                throw ConfigError(origin + ":" + std::to_string(lineno) +
                                  ": empty section name");
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(origin + ":" + std::to_string(lineno) +
                              ": expected 'key = value', got '" + line + "'");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty())
            throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty key");
        const std::string full = section.empty() ? key : section + "." + key;
        cfg.entries_[full] = value;
        cfg.lines_[full] = lineno;
    }
    return cfg;
}

Config Config::parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_string(ss.str(), path);
}

void Config::fail(const std::string& key, const std::string& what) const {
    auto it = lines_.find(key);
    const std::string where =
        it == lines_.end() ? origin_ : origin_ + ":" + std::to_string(it->second);
    throw ConfigError(where + ": " + what + " (key '" + key + "')");
}

bool Config::has(const std::string& key) const { return entries_.count(key) > 0; }

std::string Config::get_str(const std::string& key) const {
    auto it = entries_.find(key);
    if (it == entries_.end())
        throw ConfigError(origin_ + ": missing required key '" + key + "'");
    return it->second;
}

std::string Config::get_str(const std::string& key, const std::string& fallback) const {
    auto it = entries_.find(key);
    return it == entries_.end() ? fallback : it->second;
}

double Config::get_double(const std::string& key) const {
    const std::string v = get_str(key);
    try {
        std::size_t pos = 0;
        const double d = std::stod(v, &pos);
        if (pos != v.size()) fail(key, "trailing characters after number '" + v + "'");
        return d;
    } catch (const std::logic_error&) {
        fail(key, "expected a number, got '" + v + "'");
    }
}

double Config::get_double(const std::string& key, double fallback) const {
    return has(key) ? get_double(key) : fallback;
}

int Config::get_int(const std::string& key) const {
    const std::string v = get_str(key);
    try {
        std::size_t pos = 0;
        const long d = std::stol(v, &pos);
        if (pos != v.size()) fail(key, "trailing characters after integer '" + v + "'");
        return static_cast<int>(d);
    } catch (const std::logic_error&) {
        fail(key, "expected an integer, got '" + v + "'");
    }
}

int Config::get_int(const std::string& key, int fallback) const {
    return has(key) ? get_int(key) : fallback;
}

std::uint64_t Config::get_u64(const std::string& key, std::uint64_t fallback) const {
    if (!has(key)) return fallback;
    const std::string v = get_str(key);
    try {
        std::size_t pos = 0;
        const unsigned long long d = std::stoull(v, &pos);
        if (pos != v.size()) fail(key, "trailing characters after integer '" + v + "'");
        return d;
    } catch (const std::logic_error&) {
        fail(key, "expected an unsigned integer, got '" + v + "'");
    }
}

bool Config::get_bool(const std::string& key, bool fallback) const {
    if (!has(key)) return fallback;
    std::string v = get_str(key);
    std::transform(v.begin(), v.end(), v.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    if (v == "true" || v == "yes" || v == "1" || v == "on") return true;
    if (v == "false" || v == "no" || v == "0" || v == "off") return false;
    fail(key, "expected a boolean, got '" + v + "'");
}

std::vector<std::string> Config::get_list(const std::string& key) const {
    std::vector<std::string> out;
    std::istringstream ss(get_str(key));
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

ImagingSetup setup_from_config(const Config& cfg) {
    ImagingSetup s;
    s.num_elements = cfg.get_int("setup.num_elements");
    s.element_pitch = cfg.get_double("setup.element_pitch");
    s.grid_nz = cfg.get_int("setup.grid_nz");
    s.grid_nx = cfg.get_int("setup.grid_nx");
    s.grid_pitch_z = cfg.get_double("setup.grid_pitch_z");
    s.grid_pitch_x = cfg.get_double("setup.grid_pitch_x");
    s.grid_origin = cfg.get_double("setup.grid_origin");
    s.sound_speed = cfg.get_double("setup.sound_speed");
    s.sampling_rate = cfg.get_double("setup.sampling_rate");
    s.pulse_center_freq = cfg.get_double("setup.pulse_center_freq");
    s.pulse_sigma = cfg.get_double("setup.pulse_sigma");
    s.num_samples = cfg.get_int("setup.num_samples");
    try {
        s.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("invalid [setup]: ") + e.what());
    }
    return s;
}

TrainConfig train_config_from(const Config& cfg) {
    TrainConfig t;
    t.max_epochs = cfg.get_int("train.max_epochs", t.max_epochs);
    t.iters_per_epoch = cfg.get_int("train.iters_per_epoch", t.iters_per_epoch);
    t.batch_size = cfg.get_int("train.batch_size", t.batch_size);
    t.learning_rate = cfg.get_double("train.learning_rate", t.learning_rate);
    t.optimizer = cfg.get_str("train.optimizer", t.optimizer);
    const std::string snr = cfg.get_str("train.snr_db", "noiseless");
    if (snr == "noiseless")
        t.snr_db.reset();
    else
        t.snr_db = cfg.get_double("train.snr_db");
    t.early_stop_gamma = cfg.get_double("train.early_stop_gamma", t.early_stop_gamma);
    t.early_stop_patience = cfg.get_int("train.early_stop_patience", t.early_stop_patience);
    t.validation_set_size =
        cfg.get_int("train.validation_set_size", t.validation_set_size);
    t.seed = cfg.get_u64("train.seed", t.seed);
    t.scatterers_min = cfg.get_int("train.scatterers_min", t.scatterers_min);
    t.scatterers_max = cfg.get_int("train.scatterers_max", t.scatterers_max);
    t.amplitude_mean = cfg.get_double("train.amplitude_mean", t.amplitude_mean);
    t.amplitude_variance =
        cfg.get_double("train.amplitude_variance", t.amplitude_variance);
    t.trainable.forward_kernels =
        cfg.get_bool("train.train_forward", t.trainable.forward_kernels);
    t.trainable.transposed_kernels =
        cfg.get_bool("train.train_transposed", t.trainable.transposed_kernels);
    t.trainable.thresholds =
        cfg.get_bool("train.train_thresholds", t.trainable.thresholds);
    try {
        t.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("invalid [train]: ") + e.what());
    }
    return t;
}

} // namespace echorec
