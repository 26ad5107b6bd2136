// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "echorec/network.hpp"
#include "echorec/train.hpp"

namespace echorec {

/// Percentual amplitude error: sqrt(MSE) / mu * 100.
double pae(const Eigen::VectorXd& x_hat, const Eigen::VectorXd& x, double mu);

// Support error: number of entries where exactly one of |x_hat| > 0,
// |x| > 0 holds. Strict zero test; valid because shrinkage produces exact
// zeros (dense least-squares output would need an epsilon).
std::int64_t se(const Eigen::VectorXd& x_hat, const Eigen::VectorXd& x);

/// Trainable scalars only, respecting sharing and frozen groups.
std::int64_t count_params(const UnrolledNet& net);

// All scalars a deployment of the network keeps (trainable + frozen
// operator weights). mlp and alista are accounted with their dense
// matrices, matching how those baselines are actually stored.
std::int64_t persisted_scalar_count(const UnrolledNet& net);

/// persisted scalars * bytes_per_scalar + serialized header size.
std::uint64_t storage_bytes(const UnrolledNet& net, int bytes_per_scalar = 8);

struct EvalCondition {
    std::optional<double> snr_db; ///< nullopt = noiseless
    std::string name() const;
};

struct MetricsRecord {
    std::string model_id;
    std::string condition;
    double pae_percent = 0.0;
    double se_mean = 0.0;
    std::int64_t param_count = 0;
    std::uint64_t storage = 0;
    int eval_set_size = 0;
    std::uint64_t seed = 0;
};

struct BenchmarkEntry {
    std::string id;
    std::int64_t params = 0;
    std::uint64_t storage = 0;
    std::function<Eigen::VectorXd(const Eigen::VectorXd& y)> reconstruct;
};

struct EvalConfig {
    int set_size = 640;
    std::vector<EvalCondition> conditions;
    std::uint64_t seed = 1;
    int scatterers_min = 5;
    int scatterers_max = 10;
    double amplitude_mean = 1250.0;
    double amplitude_variance = 250.0;
};

// One frozen dataset per condition; every entry is evaluated on the
// identical pairs, metrics averaged over the set.
std::vector<MetricsRecord> run_benchmark(const SliceConvModel& model,
                                         const std::vector<BenchmarkEntry>& entries,
                                         const EvalConfig& cfg);

/// CSV with the fixed schema; returns the full text including header line.
std::string metrics_csv(const std::vector<MetricsRecord>& records);

/// JSON mirror of the same records.
std::string metrics_json(const std::vector<MetricsRecord>& records);

// Merge for cmd_report: records with a duplicate (model, condition) key
// keep the first occurrence; duplicates are reported through `warnings`.
std::vector<MetricsRecord> merge_metrics_records(
    const std::vector<std::vector<MetricsRecord>>& groups,
    std::vector<std::string>* warnings = nullptr);

} // namespace echorec
