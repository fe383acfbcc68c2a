#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

#include "radlabel/nn/model.hpp"

namespace radlabel::nn {

struct Hyperparams {
    int epochs = 50;
    std::size_t batch_size = 512;
    double learning_rate = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    /// Per-label positive weights; empty means inverse positive frequency of
    /// the training targets.
    std::vector<double> class_weights;
    std::uint64_t seed = 0;

    void validate() const;
};

struct Dataset {
    IdMatrix ids;
    Matrix targets;

    std::size_t size() const { return static_cast<std::size_t>(ids.rows()); }
};

Dataset make_dataset(std::span<const EncodedFindings> inputs, const std::vector<std::vector<double>>& targets,
                     const ModelConfig& cfg);

struct EpochRecord {
    int epoch = 0;  // 1-based
    double train_loss = 0.0;
    double val_loss = 0.0;
};

struct History {
    std::vector<EpochRecord> epochs;
    int best_epoch = 0;

    /// "epoch,train_loss,val_loss" with a header row.
    void write_csv(std::ostream& out) const;
};

/// 1-based index of the first minimum.
int argmin_epoch(std::span<const double> val_losses);

/// Mean weighted loss in eval mode.
double evaluate_loss(const Model& model, const Dataset& data, const LossWeights& weights);

/// One Adam update with bias correction; initializes the moments on first use.
void adam_step(Model& model, const Parameters& grads, const Hyperparams& hp);

LossWeights resolve_weights(const Hyperparams& hp, const Dataset& train, std::size_t labels);

struct TrainResult {
    Model best;
    History history;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

/// Seeded per-epoch shuffles, minibatch Adam, validation after every epoch.
/// Returns the parameters of the epoch with the lowest validation loss.
TrainResult train(Model model, const Dataset& train_set, const Dataset& val_set, const Hyperparams& hp,
                  const EpochCallback& on_epoch = {});

}  // namespace radlabel::nn
