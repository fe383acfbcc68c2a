#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <vector>

#include "radlabel/pipeline.hpp"

namespace radlabel {

/// Training rows kept at `fraction`: the sorted prefix of one seeded
/// permutation, so smaller fractions are always contained in larger ones and
/// a fraction of 1 keeps the original order.
std::vector<std::size_t> nested_subset(std::size_t n, double fraction, std::uint64_t seed);

struct SweepRow {
    double fraction = 0.0;
    std::size_t train_size = 0;
    std::vector<std::size_t> train_positives;  // per label
    nn::History history;
    EvalReport report;
};

using SweepProgress = std::function<void(double fraction, const nn::EpochRecord&)>;

/// One model per fraction, all sharing the validation and test splits.
/// Errors are rethrown with the failing fraction in the message.
std::vector<SweepRow> training_size_sweep(const PreparedSplits& splits, const std::vector<double>& fractions,
                                          const nn::Hyperparams& hp, std::uint64_t subset_seed = 0,
                                          const nn::AlignedEmbeddings* embeddings = nullptr,
                                          const SweepProgress& progress = {});

/// Plot-ready rows: fraction, label, auc, ci_low, ci_high.
void write_sweep_table(std::ostream& out, const std::vector<SweepRow>& rows);

}  // namespace radlabel
