#include <limits>
#include <sstream>

#include "doctest.h"
#include "radlabel/error.hpp"
#include "radlabel/nn/train.hpp"
#include "radlabel/rng.hpp"

using namespace radlabel;
using namespace radlabel::nn;

namespace {
ModelConfig tiny() {
    ModelConfig c;
    c.vocab_size = 12;
    c.embed_dim = 6;
    c.recurrent_units = 6;
    c.dense_units = 6;
    c.max_len = 8;
    c.num_labels = 2;
    c.seed = 2;
    return c;
}

// Label 0 is "token 3 present", label 1 is "token 4 present".
Dataset toy(std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    Dataset d;
    d.ids = IdMatrix::Zero(static_cast<Eigen::Index>(n), 8);
    d.targets = Matrix::Zero(static_cast<Eigen::Index>(n), 2);
    for (Eigen::Index i = 0; i < d.ids.rows(); ++i) {
        const auto len = 2 + static_cast<Eigen::Index>(rng.below(6));
        for (Eigen::Index t = 0; t < len; ++t) {
            d.ids(i, t) = static_cast<std::int32_t>(2 + rng.below(10));
            if (d.ids(i, t) == 3) d.targets(i, 0) = 1;
            if (d.ids(i, t) == 4) d.targets(i, 1) = 1;
        }
    }
    return d;
}
}  // namespace

TEST_SUITE("train") {

TEST_CASE("argmin epoch") {
    CHECK(argmin_epoch(std::vector<double>{0.9, 0.4, 0.6}) == 2);
    CHECK(argmin_epoch(std::vector<double>{0.5}) == 1);
    CHECK(argmin_epoch(std::vector<double>{0.3, 0.3}) == 1);
}

TEST_CASE("hyperparameter validation") {
    Hyperparams hp;
    hp.epochs = 0;
    CHECK_THROWS_AS(hp.validate(), ConfigError);
    hp = {};
    hp.learning_rate = -1;
    CHECK_THROWS_AS(hp.validate(), ConfigError);
    hp = {};
    hp.class_weights = {1.0, 0.0};
    CHECK_THROWS_AS(hp.validate(), ConfigError);
}

TEST_CASE("training learns a token rule and keeps the best epoch") {
    const auto train_set = toy(200, 1), val_set = toy(60, 2);
    Hyperparams hp;
    hp.epochs = 8;
    hp.batch_size = 16;
    hp.learning_rate = 0.01;
    hp.seed = 3;
    std::vector<double> seen;
    const auto r = train(init_model(tiny()), train_set, val_set, hp, [&](const EpochRecord& e) { seen.push_back(e.val_loss); });
    REQUIRE(r.history.epochs.size() == 8);
    CHECK(seen.size() == 8);
    CHECK(r.history.best_epoch == argmin_epoch(seen));
    const auto w = resolve_weights(hp, train_set, 2);
    CHECK(evaluate_loss(r.best, val_set, w) == doctest::Approx(seen[static_cast<std::size_t>(r.history.best_epoch - 1)]));
    CHECK(r.history.epochs.back().train_loss < r.history.epochs.front().train_loss);

    std::stringstream csv;
    r.history.write_csv(csv);
    CHECK(csv.str().rfind("epoch,train_loss,val_loss\n", 0) == 0);
}

TEST_CASE("one epoch returns that epoch") {
    Hyperparams hp;
    hp.epochs = 1;
    hp.batch_size = 32;
    const auto r = train(init_model(tiny()), toy(50, 4), toy(20, 5), hp);
    CHECK(r.history.best_epoch == 1);
    CHECK(r.best.state.epoch == 1);
}

TEST_CASE("training is deterministic") {
    Hyperparams hp;
    hp.epochs = 2;
    hp.batch_size = 8;
    hp.learning_rate = 0.005;
    hp.seed = 9;
    const auto a = train(init_model(tiny()), toy(40, 6), toy(10, 7), hp);
    const auto b = train(init_model(tiny()), toy(40, 6), toy(10, 7), hp);
    CHECK(a.best.params == b.best.params);
}

TEST_CASE("divergence is reported") {
    Hyperparams hp;
    hp.epochs = 3;
    hp.batch_size = 8;
    hp.class_weights = {std::numeric_limits<double>::infinity(), 1.0};
    CHECK_THROWS_AS(train(init_model(tiny()), toy(40, 6), toy(10, 7), hp), Diverged);
}

TEST_CASE("mismatched datasets are rejected") {
    auto bad = toy(10, 1);
    bad.targets = Matrix::Zero(10, 3);
    Hyperparams hp;
    hp.epochs = 1;
    CHECK_THROWS(train(init_model(tiny()), bad, toy(5, 2), hp));
}

}
