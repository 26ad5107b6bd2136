// SPDX-License-Identifier: Apache-2.0
#include "echorec/eval.hpp"

#include <cmath>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "echorec/io.hpp"

namespace echorec {

double pae(const Eigen::VectorXd& x_hat, const Eigen::VectorXd& x, double mu) {
    if (!(mu > 0.0)) throw std::invalid_argument("pae: mu must be positive");
    return std::sqrt(mse_loss(x_hat, x)) / mu * 100.0;
}

std::int64_t se(const Eigen::VectorXd& x_hat, const Eigen::VectorXd& x) {
    if (x_hat.size() != x.size()) throw std::invalid_argument("se: length mismatch");
    std::int64_t count = 0;
    for (Eigen::Index i = 0; i < x.size(); ++i)
        if ((std::abs(x_hat[i]) > 0.0) != (std::abs(x[i]) > 0.0)) ++count;
    return count;
}

std::int64_t count_params(const UnrolledNet& net) { return count_trainable(net); }

std::int64_t persisted_scalar_count(const UnrolledNet& net) {
    std::int64_t n = net.num_blocks; // thresholds
    const auto sets = static_cast<std::int64_t>(net.num_sets());
    switch (net.arch) {
        case Arch::mlp:
            n += sets * (std::int64_t(net.ns) * net.ns + std::int64_t(net.ns) * net.nd);
            break;
        case Arch::alista:
            // deployed with the dense operator pair, like the paper's baselines
            n += std::int64_t(net.nd) * net.ns;
            break;
        case Arch::bc:
            for (const auto& m : net.meta)
                n += sets * 2 * std::int64_t(m.c_out) * m.kernel_len;
            break;
        case Arch::cbc:
            for (const auto& m : net.meta)
                n += sets * 2 * std::int64_t(m.num_basis) * (m.kernel_len + m.c_out);
            break;
    }
    return n;
}

std::uint64_t storage_bytes(const UnrolledNet& net, int bytes_per_scalar) {
    return static_cast<std::uint64_t>(persisted_scalar_count(net)) * bytes_per_scalar +
           network_header_json(net).size();
}

std::string EvalCondition::name() const {
    if (!snr_db) return "noiseless";
    std::ostringstream ss;
    ss << format_double(*snr_db) << "dB";
    return ss.str();
}

std::vector<MetricsRecord> run_benchmark(const SliceConvModel& model,
                                         const std::vector<BenchmarkEntry>& entries,
                                         const EvalConfig& cfg) {
    if (cfg.set_size < 1) throw std::invalid_argument("run_benchmark: set_size >= 1");
    TrainConfig synth;
    synth.scatterers_min = cfg.scatterers_min;
    synth.scatterers_max = cfg.scatterers_max;
    synth.amplitude_mean = cfg.amplitude_mean;
    synth.amplitude_variance = cfg.amplitude_variance;

    std::vector<MetricsRecord> records;
    for (const auto& cond : cfg.conditions) {
        // one frozen dataset per condition, shared by every entry
        synth.snr_db = cond.snr_db;
        Rng data_rng(derive_seed(cfg.seed, "eval-" + cond.name()));
        Rng noise_rng(derive_seed(cfg.seed, "eval-noise-" + cond.name()));
        std::vector<std::pair<Eigen::VectorXd, Eigen::VectorXd>> pairs;
        pairs.reserve(cfg.set_size);
        for (int i = 0; i < cfg.set_size; ++i) {
            auto [x, y] = synthesize_pair(data_rng, noise_rng, model, synth);
            pairs.emplace_back(std::move(x.values), std::move(y.values));
        }

        for (const auto& entry : entries) {
            double pae_acc = 0.0;
            double se_acc = 0.0;
            for (const auto& [x, y] : pairs) {
                const Eigen::VectorXd x_hat = entry.reconstruct(y);
                pae_acc += pae(x_hat, x, cfg.amplitude_mean);
                se_acc += static_cast<double>(se(x_hat, x));
            }
            MetricsRecord rec;
            rec.model_id = entry.id;
            rec.condition = cond.name();
            rec.pae_percent = pae_acc / cfg.set_size;
            rec.se_mean = se_acc / cfg.set_size;
            rec.param_count = entry.params;
            rec.storage = entry.storage;
            rec.eval_set_size = cfg.set_size;
            rec.seed = cfg.seed;
            records.push_back(std::move(rec));
        }
    }
    return records;
}

std::string metrics_csv(const std::vector<MetricsRecord>& records) {
    std::ostringstream out;
    out << "model,params,storage_bytes,condition,pae_percent,se_mean,eval_n,seed\n";
    for (const auto& r : records)
        out << r.model_id << ',' << r.param_count << ',' << r.storage << ','
            << r.condition << ',' << format_double(r.pae_percent) << ','
            << format_double(r.se_mean) << ',' << r.eval_set_size << ',' << r.seed
            << '\n';
    return out.str();
}

std::string metrics_json(const std::vector<MetricsRecord>& records) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& r : records)
        arr.push_back({{"model", r.model_id},
                       {"params", r.param_count},
                       {"storage_bytes", r.storage},
                       {"condition", r.condition},
                       {"pae_percent", r.pae_percent},
                       {"se_mean", r.se_mean},
                       {"eval_n", r.eval_set_size},
                       {"seed", r.seed}});
    return arr.dump(2) + "\n";
}

std::vector<MetricsRecord> merge_metrics_records(
    const std::vector<std::vector<MetricsRecord>>& groups,
    std::vector<std::string>* warnings) {
    std::vector<MetricsRecord> merged;
    std::set<std::pair<std::string, std::string>> seen;
    for (const auto& group : groups) {
        for (const auto& r : group) {
            const auto key = std::make_pair(r.model_id, r.condition);
            if (seen.count(key)) {
                if (warnings)
                    warnings->push_back("duplicate record for model '" + r.model_id +
                                        "' condition '" + r.condition + "' dropped");
                continue;
            }
            seen.insert(key);
            merged.push_back(r);
        }
    }
    return merged;
}

} // namespace echorec
