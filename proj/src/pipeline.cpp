#include "radlabel/pipeline.hpp"

#include "radlabel/error.hpp"

namespace radlabel {

OrganDataset build_organ_dataset(const std::vector<StructuredReport>& reports, const Dictionary& dict,
                                 const RbaConfig& cfg, bool apply_protocol_filter) {
    OrganDataset out;
    out.organ = dict.organ_system;
    out.label_names = dict.output_labels();
    for (const auto& r : reports) {
        if (apply_protocol_filter && !filter_by_protocol(r, dict.organ_system)) {
            ++out.protocol_excluded;
            continue;
        }
        const auto labels = label_findings(segment_sentences(r.findings()), dict, cfg);
        if (labels.uncertain) {
            out.uncertain_ids.push_back(r.report_id);
            continue;
        }
        out.examples.push_back({r.report_id, r.subject_id, r.findings(), labels.targets()});
    }
    return out;
}

PreparedSplits prepare_splits(OrganDataset data, const nn::ModelConfig& base, std::array<double, 3> fractions,
                              std::uint64_t split_seed, std::size_t min_count) {
    if (data.examples.empty()) throw EmptyInput("no labeled examples for " + std::string(organ_name(data.organ)));
    PreparedSplits s;
    std::vector<std::string> subjects;
    subjects.reserve(data.examples.size());
    for (const auto& e : data.examples) subjects.push_back(e.subject_id);
    s.split = split_by_subject(subjects, fractions, split_seed);

    for (std::size_t i = 0; i < data.examples.size(); ++i) {
        switch (s.split.of(data.examples[i].subject_id)) {
            case Split::Train: s.train_idx.push_back(i); break;
            case Split::Val: s.val_idx.push_back(i); break;
            case Split::Test: s.test_idx.push_back(i); break;
        }
    }
    if (s.train_idx.empty() || s.val_idx.empty() || s.test_idx.empty())
        throw EmptyInput("a split is empty; more subjects are needed");

    std::vector<std::string> corpus;
    for (auto i : s.train_idx) corpus.push_back(data.examples[i].findings);
    s.vocab = build_vocabulary(corpus, min_count);

    s.config = base;
    s.config.vocab_size = s.vocab.size();
    s.config.num_labels = data.label_names.size();

    auto encode = [&](const std::vector<std::size_t>& idx) {
        std::vector<EncodedFindings> enc;
        std::vector<std::vector<double>> targets;
        for (auto i : idx) {
            enc.push_back(rnn_preprocess(data.examples[i].findings, s.vocab, s.config.max_len));
            targets.push_back(data.examples[i].targets);
        }
        return nn::make_dataset(enc, targets, s.config);
    };
    s.train = encode(s.train_idx);
    s.val = encode(s.val_idx);
    s.test = encode(s.test_idx);
    s.data = std::move(data);
    return s;
}

nn::Dataset subset(const nn::Dataset& data, const std::vector<std::size_t>& rows) {
    nn::Dataset out;
    out.ids.resize(static_cast<Eigen::Index>(rows.size()), data.ids.cols());
    out.targets.resize(static_cast<Eigen::Index>(rows.size()), data.targets.cols());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        out.ids.row(static_cast<Eigen::Index>(r)) = data.ids.row(static_cast<Eigen::Index>(rows[r]));
        out.targets.row(static_cast<Eigen::Index>(r)) = data.targets.row(static_cast<Eigen::Index>(rows[r]));
    }
    return out;
}

std::vector<std::vector<double>> to_rows(const nn::Matrix& m) {
    std::vector<std::vector<double>> rows(static_cast<std::size_t>(m.rows()));
    for (Eigen::Index i = 0; i < m.rows(); ++i) rows[static_cast<std::size_t>(i)].assign(m.row(i).begin(), m.row(i).end());
    return rows;
}

EvalReport evaluate_model(const nn::Model& model, const nn::Dataset& data, const std::vector<std::string>& label_names,
                          double alpha) {
    const auto fr = nn::forward(model.params, model.config, data.ids, false, 0);
    return evaluate(to_rows(fr.probs), to_rows(data.targets), label_names, alpha);
}

ExperimentResult run_experiment(const PreparedSplits& splits, const nn::Hyperparams& hp,
                                const nn::AlignedEmbeddings* embeddings, const nn::Dataset* train,
                                const nn::EpochCallback& on_epoch) {
    auto model = nn::init_model(splits.config, embeddings);
    auto trained = nn::train(std::move(model), train ? *train : splits.train, splits.val, hp, on_epoch);
    ExperimentResult r;
    r.test_report = evaluate_model(trained.best, splits.test, splits.data.label_names);
    r.best = std::move(trained.best);
    r.history = std::move(trained.history);
    return r;
}

}  // namespace radlabel
