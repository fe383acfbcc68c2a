#include "radlabel/nn/train.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>

#include "radlabel/error.hpp"
#include "radlabel/rng.hpp"

namespace radlabel::nn {

void Hyperparams::validate() const {
    if (epochs < 1) throw ConfigError("epochs must be >= 1");
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be > 0");
    for (double w : class_weights)
        if (!(w > 0.0)) throw ConfigError("class weights must be > 0");
}

Dataset make_dataset(std::span<const EncodedFindings> inputs, const std::vector<std::vector<double>>& targets,
                     const ModelConfig& cfg) {
    if (inputs.size() != targets.size()) throw ShapeError("inputs and targets differ in length");
    Dataset d;
    d.ids = make_batch(inputs, cfg);
    d.targets = targets.empty() ? Matrix(0, static_cast<Eigen::Index>(cfg.num_labels)) : to_matrix(targets);
    if (d.targets.cols() != static_cast<Eigen::Index>(cfg.num_labels))
        throw ShapeError("targets have " + std::to_string(d.targets.cols()) + " labels, model has " +
                         std::to_string(cfg.num_labels));
    return d;
}

void History::write_csv(std::ostream& out) const {
    out << "epoch,train_loss,val_loss\n";
    out.precision(17);
    for (const auto& e : epochs) out << e.epoch << ',' << e.train_loss << ',' << e.val_loss << '\n';
}

int argmin_epoch(std::span<const double> val_losses) {
    if (val_losses.empty()) return 0;
    return static_cast<int>(std::min_element(val_losses.begin(), val_losses.end()) - val_losses.begin()) + 1;
}

double evaluate_loss(const Model& model, const Dataset& data, const LossWeights& weights) {
    if (data.size() == 0) throw EmptyInput("validation set is empty");
    const auto fr = forward(model.params, model.config, data.ids, false, 0);
    return loss(fr.probs, data.targets, weights);
}

void adam_step(Model& model, const Parameters& grads, const Hyperparams& hp) {
    auto& st = model.state;
    if (!st.has_moments) {
        st.adam_m = model.params.zeros_like();
        st.adam_v = model.params.zeros_like();
        st.has_moments = true;
    }
    ++st.step;
    const double t = static_cast<double>(st.step);
    const double c1 = 1.0 - std::pow(hp.beta1, t);
    const double c2 = 1.0 - std::pow(hp.beta2, t);

    std::vector<Matrix*> p, m, v;
    std::vector<const Matrix*> g;
    model.params.for_each([&](std::string_view, Matrix& x) { p.push_back(&x); });
    st.adam_m.for_each([&](std::string_view, Matrix& x) { m.push_back(&x); });
    st.adam_v.for_each([&](std::string_view, Matrix& x) { v.push_back(&x); });
    grads.for_each([&](std::string_view, const Matrix& x) { g.push_back(&x); });
    for (std::size_t i = 0; i < p.size(); ++i) {
        m[i]->array() = hp.beta1 * m[i]->array() + (1.0 - hp.beta1) * g[i]->array();
        v[i]->array() = hp.beta2 * v[i]->array() + (1.0 - hp.beta2) * g[i]->array().square();
        p[i]->array() -= hp.learning_rate * (m[i]->array() / c1) / ((v[i]->array() / c2).sqrt() + hp.epsilon);
    }
}

LossWeights resolve_weights(const Hyperparams& hp, const Dataset& train, std::size_t labels) {
    if (!hp.class_weights.empty()) {
        if (hp.class_weights.size() != labels)
            throw ConfigError("expected " + std::to_string(labels) + " class weights, got " +
                              std::to_string(hp.class_weights.size()));
        LossWeights w = LossWeights::uniform(labels);
        w.positive = hp.class_weights;
        return w;
    }
    std::vector<std::vector<double>> rows(train.size(), std::vector<double>(labels));
    for (std::size_t i = 0; i < train.size(); ++i)
        for (std::size_t k = 0; k < labels; ++k)
            rows[i][k] = train.targets(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k));
    return LossWeights::inverse_frequency(rows, labels);
}

TrainResult train(Model model, const Dataset& train_set, const Dataset& val_set, const Hyperparams& hp,
                  const EpochCallback& on_epoch) {
    hp.validate();
    if (train_set.size() == 0) throw EmptyInput("training set is empty");
    const auto labels = model.config.num_labels;
    const LossWeights weights = resolve_weights(hp, train_set, labels);

    TrainResult result;
    result.best = model;
    double best = std::numeric_limits<double>::infinity();
    std::vector<std::size_t> order(train_set.size());

    for (int epoch = 1; epoch <= hp.epochs; ++epoch) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        Rng rng(mix_seed(hp.seed, static_cast<std::uint64_t>(epoch)));
        rng.shuffle(order);

        double loss_sum = 0.0;
        std::size_t seen = 0;
        for (std::size_t start = 0; start < order.size(); start += hp.batch_size) {
            const std::size_t n = std::min(hp.batch_size, order.size() - start);
            IdMatrix ids(static_cast<Eigen::Index>(n), train_set.ids.cols());
            Matrix y(static_cast<Eigen::Index>(n), train_set.targets.cols());
            for (std::size_t r = 0; r < n; ++r) {
                ids.row(static_cast<Eigen::Index>(r)) = train_set.ids.row(static_cast<Eigen::Index>(order[start + r]));
                y.row(static_cast<Eigen::Index>(r)) = train_set.targets.row(static_cast<Eigen::Index>(order[start + r]));
            }
            const std::uint64_t dropout_seed = mix_seed(hp.seed ^ 0x5bd1e995ULL, model.state.step);
            const auto g = gradients(model.params, model.config, ids, y, weights, true, dropout_seed);
            if (!std::isfinite(g.loss)) throw Diverged(epoch, "non-finite training loss");
            adam_step(model, g.grads, hp);
            if (!model.params.all_finite()) throw Diverged(epoch, "non-finite parameters after update");
            loss_sum += g.loss * static_cast<double>(n);
            seen += n;
        }

        EpochRecord rec;
        rec.epoch = epoch;
        rec.train_loss = loss_sum / static_cast<double>(seen);
        rec.val_loss = evaluate_loss(model, val_set, weights);
        if (!std::isfinite(rec.val_loss)) throw Diverged(epoch, "non-finite validation loss");
        model.state.epoch = epoch;
        result.history.epochs.push_back(rec);
        if (rec.val_loss < best) {
            best = rec.val_loss;
            model.state.best_val_loss = best;
            result.best = model;
            result.history.best_epoch = epoch;
        }
        if (on_epoch) on_epoch(rec);
    }
    return result;
}

}  // namespace radlabel::nn
