#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "riskquant/dataset.hpp"
#include "riskquant/nn.hpp"

namespace riskquant {

/// Optimizer and minibatch settings. Seeds expand into independent
/// streams (init/shuffle/data/alpha), so fits are reproducible.
struct TrainConfig {
    int epochs = 100;
    int batch_size = 1024;
    double learning_rate = 1e-2;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    std::uint64_t seed = 0;
    bool shuffle = true;

    void validate() const;
};

/// Bias-corrected Adam moment accumulators, shaped like the network.
struct AdamState {
    explicit AdamState(const nn::Network& net);
    nn::Gradients m;
    nn::Gradients v;
    long step = 0;
};

/// One Adam update of `net` in place from batch-mean gradients.
void adam_step(nn::Network& net, const nn::Gradients& grads, AdamState& state,
               const TrainConfig& cfg);

/// Batch view handed to loss closures: row indices into the dataset.
struct BatchView {
    const Dataset& data;
    std::span<const std::size_t> rows;
};

/// Loss closure contract: mean loss over the batch plus mean parameter
/// gradients (same shapes as the network).
struct BatchLoss {
    double loss;
    nn::Gradients grads;
};
using LossClosure = std::function<BatchLoss(const nn::Network&, const BatchView&)>;

struct TrainResult {
    nn::Network net;
    std::vector<double> history;  // per-epoch mean training loss
};

/// Runs epochs x ceil(n/batch) Adam steps over seeded-shuffled minibatches.
/// A fresh permutation is drawn each epoch. Throws InputError on an empty
/// dataset and TrainingError (naming epoch and step) on non-finite loss.
TrainResult train(nn::Network net, const Dataset& data, const LossClosure& closure,
                  const TrainConfig& cfg);

/// Solves argmin_w |Phi w - t|^2 + ridge |w|^2 through the normal
/// equations. With ridge == 0 a singular system raises SolverError
/// advising a positive ridge.
Eigen::VectorXd linear_least_squares(const Eigen::MatrixXd& features,
                                     const Eigen::VectorXd& targets, double ridge);

}  // namespace riskquant
