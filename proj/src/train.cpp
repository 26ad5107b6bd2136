// SPDX-License-Identifier: Apache-2.0
#include "echorec/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "echorec/linop.hpp"
#include "echorec/solver.hpp"

namespace echorec {

void TrainConfig::validate() const {
    if (max_epochs < 0) throw std::invalid_argument("max_epochs must be >= 0");
    if (iters_per_epoch < 1) throw std::invalid_argument("iters_per_epoch must be >= 1");
    if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
    if (!(early_stop_gamma > 0.0)) throw std::invalid_argument("gamma must be > 0");
    if (early_stop_patience < 1) throw std::invalid_argument("patience must be >= 1");
    if (validation_set_size < 1) throw std::invalid_argument("validation size must be >= 1");
    if (scatterers_min < 1 || scatterers_max < scatterers_min)
        throw std::invalid_argument("scatterer range invalid");
    if (!(amplitude_variance >= 0.0)) throw std::invalid_argument("variance must be >= 0");
    if (!(learning_rate > 0.0)) throw std::invalid_argument("learning rate must be > 0");
    if (optimizer != "adam") throw std::invalid_argument("unknown optimizer: " + optimizer);
}

ReflectivityMap sample_reflectivity(Rng& rng, int nz, int nx, const TrainConfig& cfg) {
    const std::int64_t pixels = std::int64_t(nz) * nx;
    if (cfg.scatterers_max > pixels)
        throw std::invalid_argument("scatterer range exceeds pixel count");
    ReflectivityMap map(nz, nx);
    const auto n = static_cast<int>(rng.uniform_int(cfg.scatterers_min, cfg.scatterers_max));
    const double sigma = std::sqrt(cfg.amplitude_variance);
    int placed = 0;
    while (placed < n) {
        const auto idx = rng.uniform_int(0, pixels - 1);
        if (map.values[idx] != 0.0) continue;
        double a = rng.normal(cfg.amplitude_mean, sigma);
        while (a == 0.0) a = rng.normal(cfg.amplitude_mean, sigma);
        map.values[idx] = a;
        ++placed;
    }
    return map;
}

void add_awgn(Eigen::VectorXd& y, double snr_db, Rng& rng) {
    const double signal_power = y.squaredNorm() / static_cast<double>(y.size());
    if (signal_power == 0.0)
        throw std::invalid_argument("add_awgn: zero signal has no defined SNR");
    const double noise_sd = std::sqrt(signal_power / std::pow(10.0, snr_db / 10.0));
    for (Eigen::Index i = 0; i < y.size(); ++i) y[i] += rng.normal(0.0, noise_sd);
}

std::pair<ReflectivityMap, DataCube> synthesize_pair(Rng& data_rng, Rng& noise_rng,
                                                     const SliceConvModel& model,
                                                     const TrainConfig& cfg) {
    ReflectivityMap x =
        sample_reflectivity(data_rng, model.setup.grid_nz, model.setup.grid_nx, cfg);
    DataCube y = forward_apply(model, x);
    if (cfg.snr_db) add_awgn(y.values, *cfg.snr_db, noise_rng);
    return {std::move(x), std::move(y)};
}

double mse_loss(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    if (a.size() != b.size()) throw std::invalid_argument("mse_loss: length mismatch");
    return (a - b).squaredNorm() / static_cast<double>(a.size());
}

AdamState make_adam_state(const UnrolledNet& net) {
    AdamState st;
    const std::int64_t n = count_trainable(net);
    st.m = Eigen::VectorXd::Zero(n);
    st.v = Eigen::VectorXd::Zero(n);
    return st;
}

void optimizer_step(UnrolledNet& net, GradSet& grads, AdamState& state,
                    const TrainConfig& cfg) {
    constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    auto params = trainable_params(net);
    auto gviews = grad_views(grads, net);
    state.step += 1;
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(state.step));
    std::int64_t off = 0;
    for (std::size_t i = 0; i < params.size(); ++i) {
        double* p = params[i].data;
        const double* gr = gviews[i].data;
        for (Eigen::Index j = 0; j < params[i].size; ++j) {
            const double gj = gr[j];
            double& m = state.m[off + j];
            double& v = state.v[off + j];
            m = beta1 * m + (1.0 - beta1) * gj;
            v = beta2 * v + (1.0 - beta2) * gj * gj;
            p[j] -= cfg.learning_rate * (m / bc1) / (std::sqrt(v / bc2) + eps);
        }
        off += params[i].size;
    }
    // nonnegativity projection
    if (net.trainable.thresholds)
        net.thresholds = net.thresholds.cwiseMax(0.0);
}

bool EarlyStop::feed(double val_loss) {
    if (!has_prev_) {
        has_prev_ = true;
        prev_ = val_loss;
        return false;
    }
    double rel;
    if (prev_ == 0.0)
        rel = val_loss == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
    else
        rel = (val_loss - prev_) / prev_;
    prev_ = val_loss;
    if (rel < gamma_)
        ++streak_;
    else
        streak_ = 0;
    return streak_ >= patience_;
}

std::pair<UnrolledNet, TrainRecord> train_network(UnrolledNet net,
                                                  const SliceConvModel& model,
                                                  const TrainConfig& cfg) {
    cfg.validate();
    if (net.ns != model.image_size() || net.nd != model.data_size())
        throw std::invalid_argument("train_network: network/model dims mismatch");

    TrainRecord record;
    record.config = cfg;
    if (cfg.max_epochs == 0) {
        record.stop_reason = "max_epochs";
        return {std::move(net), std::move(record)};
    }

    // fixed validation set from its dedicated stream
    Rng val_data(derive_seed(cfg.seed, "validation"));
    Rng val_noise(derive_seed(cfg.seed, "validation-noise"));
    std::vector<std::pair<Eigen::VectorXd, Eigen::VectorXd>> val_set; // (x, y)
    val_set.reserve(cfg.validation_set_size);
    for (int i = 0; i < cfg.validation_set_size; ++i) {
        auto [x, y] = synthesize_pair(val_data, val_noise, model, cfg);
        val_set.emplace_back(std::move(x.values), std::move(y.values));
    }
    auto validation_loss = [&](const UnrolledNet& n) {
        double acc = 0.0;
        for (const auto& [x, y] : val_set) acc += mse_loss(network_forward(n, y), x);
        return acc / static_cast<double>(val_set.size());
    };

    Rng data_rng(derive_seed(cfg.seed, "data"));
    Rng noise_rng(derive_seed(cfg.seed, "noise"));
    AdamState adam = make_adam_state(net);
    EarlyStop stopper(cfg.early_stop_gamma, cfg.early_stop_patience);

    UnrolledNet best = net;
    double best_val = std::numeric_limits<double>::infinity();
    record.stop_reason = "max_epochs";

    for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
        const auto t0 = std::chrono::steady_clock::now();
        double epoch_loss = 0.0;
        bool nan_hit = false;
        for (int iter = 0; iter < cfg.iters_per_epoch && !nan_hit; ++iter) {
            GradSet batch_grads = make_zero_grads(net);
            auto bviews = grad_views(batch_grads, net);
            double batch_loss = 0.0;
            for (int b = 0; b < cfg.batch_size; ++b) {
                auto [x, y] = synthesize_pair(data_rng, noise_rng, model, cfg);
                ForwardTrace trace;
                const Eigen::VectorXd x_hat = network_forward(net, y.values, &trace);
                batch_loss += mse_loss(x_hat, x.values);
                GradSet g = network_backward(net, trace, x.values);
                auto gv = grad_views(g, net);
                for (std::size_t i = 0; i < bviews.size(); ++i)
                    for (Eigen::Index j = 0; j < bviews[i].size; ++j)
                        bviews[i].data[j] += gv[i].data[j];
            }
            batch_loss /= cfg.batch_size;
            if (!std::isfinite(batch_loss)) {
                record.stop_reason = "nan@epoch" + std::to_string(epoch + 1) + "/iter" +
                                     std::to_string(iter + 1);
                nan_hit = true;
                break;
            }
            for (auto& view : bviews)
                for (Eigen::Index j = 0; j < view.size; ++j)
                    view.data[j] /= cfg.batch_size;
            optimizer_step(net, batch_grads, adam, cfg);
            epoch_loss += batch_loss;
        }
        if (nan_hit) {
            record.epochs = epoch;
            break;
        }
        epoch_loss /= cfg.iters_per_epoch;
        const double vloss = validation_loss(net);
        const auto t1 = std::chrono::steady_clock::now();
        record.train_loss.push_back(epoch_loss);
        record.val_loss.push_back(vloss);
        record.wall_ms.push_back(
            std::chrono::duration<double, std::milli>(t1 - t0).count());
        record.epochs = epoch + 1;

        if (!std::isfinite(vloss)) {
            record.stop_reason = "nan@epoch" + std::to_string(epoch + 1) + "/validation";
            break;
        }
        if (vloss < best_val) {
            best_val = vloss;
            best = net;
        }
        if (stopper.feed(vloss)) {
            record.stop_reason = "early";
            break;
        }
    }

    if (best_val == std::numeric_limits<double>::infinity()) best = std::move(net);
    return {std::move(best), std::move(record)};
}

std::vector<AblationCell> cross_product_cells(const std::vector<int>& blocks,
                                              const std::vector<std::string>& inits,
                                              const std::vector<bool>& freeze_forward) {
    std::vector<AblationCell> cells;
    for (int b : blocks)
        for (const auto& init : inits)
            for (bool f : freeze_forward) cells.push_back({b, init, f});
    return cells;
}

std::vector<AblationResult> run_ablation(const SliceConvModel& model,
                                         const AblationConfig& cfg) {
    cfg.train.validate();
    const ModelOperator op(model);
    const LipschitzEstimate lip = estimate_lipschitz(op);

    double lambda = cfg.lambda;
    if (lambda < 0.0) {
        // scale-free default from a noise-free probe pair on the data stream
        Rng probe(derive_seed(cfg.train.seed, "lambda-probe"));
        TrainConfig probe_cfg = cfg.train;
        probe_cfg.snr_db.reset();
        Rng noise(0);
        auto [x, y] = synthesize_pair(probe, noise, model, probe_cfg);
        lambda = default_lambda(op, y.values);
    }

    // analytic operators shared across cells that use them
    CompressedModel omp_model, svd_model;
    bool have_omp = false, have_svd = false;

    std::vector<AblationResult> results;
    for (std::size_t i = 0; i < cfg.cells.size(); ++i) {
        const AblationCell& cell = cfg.cells[i];
        TrainConfig train_cfg = cfg.train;
        train_cfg.seed = derive_seed(cfg.train.seed, "ablation-cell", i);
        train_cfg.trainable.forward_kernels = !cell.freeze_forward;

        UnrolledNet net;
        if (cell.init == "omp" || cell.init == "svd") {
            const bool omp = cell.init == "omp";
            if (omp && !have_omp) {
                omp_model = compress_model(model, FactorMethod::omp, cfg.num_basis);
                have_omp = true;
            }
            if (!omp && !have_svd) {
                svd_model = compress_model(model, FactorMethod::svd, cfg.num_basis);
                have_svd = true;
            }
            net = build_network(Arch::cbc, cell.blocks, omp ? omp_model : svd_model,
                                lambda, lip.value, train_cfg.trainable);
        } else {
            // random inits borrow the omp model shapes only
            if (!have_omp) {
                omp_model = compress_model(model, FactorMethod::omp, cfg.num_basis);
                have_omp = true;
            }
            net = build_network(Arch::cbc, cell.blocks, omp_model, lambda, lip.value,
                                train_cfg.trainable, true,
                                {init_kind_from_string(cell.init), train_cfg.seed});
        }

        auto [trained, rec] = train_network(std::move(net), model, train_cfg);
        AblationResult r;
        r.cell = cell;
        r.seed = train_cfg.seed;
        r.diverged = rec.stop_reason.rfind("nan", 0) == 0;
        r.final_val_loss = rec.val_loss.empty()
                               ? std::numeric_limits<double>::quiet_NaN()
                               : rec.val_loss.back();
        r.record = std::move(rec);
        results.push_back(std::move(r));
    }
    return results;
}

} // namespace echorec
