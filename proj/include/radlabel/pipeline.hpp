#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "radlabel/eval.hpp"
#include "radlabel/nn/model.hpp"
#include "radlabel/nn/train.hpp"
#include "radlabel/rba.hpp"
#include "radlabel/text.hpp"

namespace radlabel {

struct OrganExample {
    std::string report_id;
    std::string subject_id;
    std::string findings;
    std::vector<double> targets;  // four diseases then normal
};

/// Weakly labeled training material for one organ.
struct OrganDataset {
    OrganSystem organ = OrganSystem::LungsPleura;
    std::vector<std::string> label_names;
    std::vector<OrganExample> examples;
    std::vector<std::string> uncertain_ids;  // excluded from training
    std::size_t protocol_excluded = 0;
};

/// Labels every report with the rule engine. Reports whose protocol does not
/// cover the organ are skipped, uncertain ones are set aside.
OrganDataset build_organ_dataset(const std::vector<StructuredReport>& reports, const Dictionary& dict,
                                 const RbaConfig& cfg = {}, bool apply_protocol_filter = true);

struct PreparedSplits {
    OrganDataset data;
    SplitAssignment split;
    Vocabulary vocab;
    nn::ModelConfig config;  // vocab_size and num_labels filled in
    std::vector<std::size_t> train_idx, val_idx, test_idx;  // into data.examples
    nn::Dataset train, val, test;
};

/// Subject-level split, vocabulary from the training split only, then
/// encoding at `base.max_len`.
PreparedSplits prepare_splits(OrganDataset data, const nn::ModelConfig& base,
                              std::array<double, 3> fractions = {0.70, 0.15, 0.15}, std::uint64_t split_seed = 0,
                              std::size_t min_count = 1);

/// Rows of `data` selected by `rows`.
nn::Dataset subset(const nn::Dataset& data, const std::vector<std::size_t>& rows);

std::vector<std::vector<double>> to_rows(const nn::Matrix& m);

EvalReport evaluate_model(const nn::Model& model, const nn::Dataset& data, const std::vector<std::string>& label_names,
                          double alpha = 0.05);

struct ExperimentResult {
    nn::Model best;
    nn::History history;
    EvalReport test_report;
};

/// Trains on `train` (defaulting to the full training split), selects the
/// best validation epoch and evaluates it on the test split.
ExperimentResult run_experiment(const PreparedSplits& splits, const nn::Hyperparams& hp,
                                const nn::AlignedEmbeddings* embeddings = nullptr, const nn::Dataset* train = nullptr,
                                const nn::EpochCallback& on_epoch = {});

}  // namespace radlabel
