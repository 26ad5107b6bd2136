// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "echorec/network.hpp"
#include "echorec/rng.hpp"
#include "echorec/types.hpp"

namespace echorec {

struct TrainConfig {
    int max_epochs = 400;
    int iters_per_epoch = 100;
    int batch_size = 8;
    double learning_rate = 1e-4;
    std::string optimizer = "adam";
    std::optional<double> snr_db;      ///< nullopt = noiseless
    double early_stop_gamma = 1e-6;
    int early_stop_patience = 5;
    int validation_set_size = 64;
    std::uint64_t seed = 1;
    int scatterers_min = 5;
    int scatterers_max = 10;
    double amplitude_mean = 1250.0;
    double amplitude_variance = 250.0; ///< stored as variance, not sigma
    ParamGroupFlags trainable;

    void validate() const;
};

struct TrainRecord {
    std::vector<double> train_loss; ///< per-epoch mean batch loss
    std::vector<double> val_loss;
    std::vector<double> wall_ms;
    std::string stop_reason;        ///< "early" | "max_epochs" | "nan@epochE/iterI"
    int epochs = 0;
    TrainConfig config;             ///< provenance
};

/// n ~ U{min..max} scatterers at distinct uniform pixels, amplitudes
/// Normal(mean, variance); all other pixels zero.
ReflectivityMap sample_reflectivity(Rng& rng, int nz, int nx, const TrainConfig& cfg);

/// In-place AWGN at the given SNR; noise variance = mean(y^2) / 10^(snr/10).
void add_awgn(Eigen::VectorXd& y, double snr_db, Rng& rng);

/// Fresh (x, y) pair: y = A x plus noise when the config has finite SNR.
std::pair<ReflectivityMap, DataCube> synthesize_pair(Rng& data_rng, Rng& noise_rng,
                                                     const SliceConvModel& model,
                                                     const TrainConfig& cfg);

/// Mean over entries of (a - b)^2.
double mse_loss(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

// Adam with bias correction (beta1 = 0.9, beta2 = 0.999, eps = 1e-8);
// thresholds are clamped to >= 0 after every update.
struct AdamState {
    Eigen::VectorXd m, v;
    long step = 0;
};
AdamState make_adam_state(const UnrolledNet& net);
void optimizer_step(UnrolledNet& net, GradSet& grads, AdamState& state,
                    const TrainConfig& cfg);

// MSE training with a fixed seeded validation set, fresh on-the-fly batches
// each iteration, early stopping on the signed relative validation change
// staying below gamma for `patience` consecutive epochs, best-validation
// weights returned. A non-finite loss stops training and is recorded in
// stop_reason rather than thrown.
std::pair<UnrolledNet, TrainRecord> train_network(UnrolledNet net,
                                                  const SliceConvModel& model,
                                                  const TrainConfig& cfg);

/// Early-stop predicate on a loss sequence; unit-testable in isolation.
class EarlyStop {
public:
    EarlyStop(double gamma, int patience) : gamma_(gamma), patience_(patience) {}
    /// Feed one epoch's validation loss; returns true when training should stop.
    bool feed(double val_loss);

private:
    double gamma_;
    int patience_;
    int streak_ = 0;
    bool has_prev_ = false;
    double prev_ = 0.0;
};

struct AblationCell {
    int blocks = 10;
    std::string init = "omp";    ///< omp | svd | xavier | kaiming | orthogonal
    bool freeze_forward = false;
};

struct AblationResult {
    AblationCell cell;
    TrainRecord record;
    double final_val_loss = 0.0;
    bool diverged = false;
    std::uint64_t seed = 0;
};

struct AblationConfig {
    std::vector<AblationCell> cells;
    int num_basis = 16;          ///< factor budget for the compressed operator
    TrainConfig train;
    double lambda = -1.0;        ///< < 0: default_lambda on a probe pair
};

/// Builds cells as the cross product of the three factor lists.
std::vector<AblationCell> cross_product_cells(const std::vector<int>& blocks,
                                              const std::vector<std::string>& inits,
                                              const std::vector<bool>& freeze_forward);

/// Trains one cbc network per cell, each cell independently seeded; a
/// diverged cell is recorded, not fatal.
std::vector<AblationResult> run_ablation(const SliceConvModel& model,
                                         const AblationConfig& cfg);

} // namespace echorec
