#include "radlabel/sweep.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>

#include "radlabel/error.hpp"
#include "radlabel/rng.hpp"

namespace radlabel {

std::vector<std::size_t> nested_subset(std::size_t n, double fraction, std::uint64_t seed) {
    if (!(fraction > 0.0 && fraction <= 1.0)) throw ConfigError("sweep fractions must lie in (0, 1]");
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    Rng rng(mix_seed(seed, 0x5eedULL));
    rng.shuffle(perm);
    const auto keep = std::min(n, static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(n) - 1e-9)));
    perm.resize(std::max<std::size_t>(keep, n ? 1 : 0));
    std::sort(perm.begin(), perm.end());
    return perm;
}

std::vector<SweepRow> training_size_sweep(const PreparedSplits& splits, const std::vector<double>& fractions,
                                          const nn::Hyperparams& hp, std::uint64_t subset_seed,
                                          const nn::AlignedEmbeddings* embeddings, const SweepProgress& progress) {
    if (fractions.empty()) throw ConfigError("no sweep fractions given");
    std::vector<SweepRow> rows;
    for (double f : fractions) {
        char tag[32];
        std::snprintf(tag, sizeof tag, "fraction %.2f: ", f);
        try {
            SweepRow row;
            row.fraction = f;
            const auto keep = nested_subset(splits.train.size(), f, subset_seed);
            const auto train = subset(splits.train, keep);
            row.train_size = train.size();
            row.train_positives.assign(static_cast<std::size_t>(train.targets.cols()), 0);
            for (Eigen::Index i = 0; i < train.targets.rows(); ++i)
                for (Eigen::Index k = 0; k < train.targets.cols(); ++k)
                    row.train_positives[static_cast<std::size_t>(k)] += train.targets(i, k) > 0.5 ? 1 : 0;
            nn::EpochCallback cb;
            if (progress) cb = [&](const nn::EpochRecord& e) { progress(f, e); };
            auto result = run_experiment(splits, hp, embeddings, &train, cb);
            row.history = std::move(result.history);
            row.report = std::move(result.test_report);
            rows.push_back(std::move(row));
        } catch (const Diverged& e) {
            throw Diverged(e.epoch(), tag + std::string(e.what()));
        } catch (const Error& e) {
            throw Error(e.family(), tag + std::string(e.what()));
        }
    }
    return rows;
}

void write_sweep_table(std::ostream& out, const std::vector<SweepRow>& rows) {
    out << "fraction\tlabel\tauc\tci_low\tci_high\n";
    char buf[160];
    for (const auto& row : rows) {
        for (const auto& l : row.report.labels) {
            if (l.auc_defined)
                std::snprintf(buf, sizeof buf, "%.2f\t%s\t%.4f\t%.4f\t%.4f\n", row.fraction, l.label.c_str(),
                              l.auc.auc, l.auc.ci_low, l.auc.ci_high);
            else
                std::snprintf(buf, sizeof buf, "%.2f\t%s\tNA\tNA\tNA\n", row.fraction, l.label.c_str());
            out << buf;
        }
    }
}

}  // namespace radlabel
