#include <set>
#include <sstream>

#include "doctest.h"
#include "radlabel/corpus.hpp"
#include "radlabel/error.hpp"
#include "radlabel/pipeline.hpp"
#include "radlabel/sweep.hpp"

using namespace radlabel;

namespace {
const OrganDictionaries& dicts() {
    static const OrganDictionaries d = [] {
        OrganDictionaries out;
        for (auto o : kAllOrgans) out[o] = load_dictionary(bundled_dictionary_path(o));
        return out;
    }();
    return d;
}

std::vector<StructuredReport> reports(std::uint64_t seed, std::size_t n) {
    auto s = GenSpec::defaults();
    s.seed = seed;
    s.report_count = n;
    std::vector<StructuredReport> out;
    for (auto& g : generate_corpus(s, dicts())) out.push_back(std::move(g.report));
    return out;
}

nn::ModelConfig small_model() {
    nn::ModelConfig c;
    c.embed_dim = 8;
    c.recurrent_units = 8;
    c.dense_units = 8;
    c.max_len = 48;
    c.seed = 1;
    return c;
}
}  // namespace

TEST_SUITE("pipeline") {

TEST_CASE("organ dataset excludes uncertain and filtered reports") {
    const auto rs = reports(1, 300);
    const auto d = build_organ_dataset(rs, dicts().at(OrganSystem::LungsPleura));
    CHECK(d.examples.size() + d.uncertain_ids.size() + d.protocol_excluded == rs.size());
    CHECK(d.protocol_excluded > 0);
    for (const auto& e : d.examples) CHECK(e.targets.size() == 5);
    const auto all = build_organ_dataset(rs, dicts().at(OrganSystem::LungsPleura), {}, false);
    CHECK(all.protocol_excluded == 0);
}

TEST_CASE("splits keep subjects together and build the vocabulary from train") {
    const auto s = prepare_splits(build_organ_dataset(reports(2, 400), dicts().at(OrganSystem::LiverGallbladder)),
                                  small_model(), {0.7, 0.15, 0.15}, 3);
    std::set<std::string> train_subjects, other;
    for (auto i : s.train_idx) train_subjects.insert(s.data.examples[i].subject_id);
    for (auto i : s.val_idx) other.insert(s.data.examples[i].subject_id);
    for (auto i : s.test_idx) other.insert(s.data.examples[i].subject_id);
    for (const auto& x : other) CHECK(train_subjects.count(x) == 0);
    CHECK(s.config.vocab_size == s.vocab.size());
    CHECK(s.train.size() == s.train_idx.size());
    CHECK(s.test.ids.cols() == 48);
}

TEST_CASE("empty input is reported") {
    OrganDataset empty;
    CHECK_THROWS_AS(prepare_splits(empty, small_model()), EmptyInput);
}

TEST_CASE("nested subsets") {
    const auto a = nested_subset(100, 0.2, 4);
    const auto b = nested_subset(100, 0.6, 4);
    CHECK(a.size() == 20);
    CHECK(b.size() == 60);
    CHECK(std::includes(b.begin(), b.end(), a.begin(), a.end()));
    const auto full = nested_subset(100, 1.0, 4);
    for (std::size_t i = 0; i < full.size(); ++i) CHECK(full[i] == i);
    CHECK_THROWS_AS(nested_subset(10, 0.0, 1), ConfigError);
}

TEST_CASE("a single full fraction equals one experiment") {
    const auto s = prepare_splits(build_organ_dataset(reports(3, 250), dicts().at(OrganSystem::LungsPleura)),
                                  small_model(), {0.7, 0.15, 0.15}, 1);
    nn::Hyperparams hp;
    hp.epochs = 2;
    hp.batch_size = 32;
    hp.learning_rate = 3e-3;
    hp.seed = 5;
    const auto rows = training_size_sweep(s, {1.0}, hp);
    const auto direct = run_experiment(s, hp);
    REQUIRE(rows.size() == 1);
    REQUIRE(rows[0].report.labels.size() == direct.test_report.labels.size());
    for (std::size_t k = 0; k < direct.test_report.labels.size(); ++k)
        CHECK(rows[0].report.labels[k].auc.auc == direct.test_report.labels[k].auc.auc);

    std::stringstream table;
    write_sweep_table(table, rows);
    CHECK(table.str().rfind("fraction\tlabel\tauc\tci_low\tci_high\n", 0) == 0);
}

TEST_CASE("training on weak labels lowers the loss") {
    const auto s = prepare_splits(build_organ_dataset(reports(4, 600), dicts().at(OrganSystem::LungsPleura)),
                                  small_model(), {0.7, 0.15, 0.15}, 2);
    nn::Hyperparams hp;
    hp.epochs = 5;
    hp.batch_size = 32;
    hp.learning_rate = 3e-3;
    const auto w = nn::resolve_weights(hp, s.train, 5);
    const double before = nn::evaluate_loss(nn::init_model(s.config), s.train, w);
    const auto r = run_experiment(s, hp);
    CHECK(r.history.epochs.back().train_loss < before);
}

}
