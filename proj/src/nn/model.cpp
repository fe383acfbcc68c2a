#include "radlabel/nn/model.hpp"

#include <algorithm>
#include <cmath>

#include "radlabel/error.hpp"
#include "radlabel/rng.hpp"

namespace radlabel::nn {

namespace {

Eigen::ArrayXXd sigmoid(const Eigen::ArrayXXd& x) { return 1.0 / (1.0 + (-x).exp()); }

void fill_uniform(Matrix& m, Rng& rng, double limit) {
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(-limit, limit);
}

void glorot(Matrix& m, Rng& rng) {
    fill_uniform(m, rng, std::sqrt(6.0 / static_cast<double>(m.rows() + m.cols())));
}

struct DirectionCache {
    std::vector<Matrix> gates;  // activated i, f, g, o: B x 4H
    std::vector<Matrix> cell;   // B x H
    std::vector<Matrix> cell_tanh;
    std::vector<Matrix> hidden;
};

struct Cache {
    Matrix inputs;               // stacked embeddings, (T * B) x E
    DirectionCache fwd, bwd;
    std::vector<Matrix> mask;    // B x 2H per step, empty without dropout
    std::vector<Matrix> output;  // dropped-out BiLSTM output, B x 2H per step
    Matrix alpha;                // B x T
    Matrix context;              // B x 2H
    Matrix dense;                // B x D, after tanh
    Matrix probs;                // B x K
};

// All time steps stacked: row t * B + b holds the embedding of ids(b, t).
Matrix gather_all(const Matrix& embedding, const IdMatrix& ids) {
    const Eigen::Index batch = ids.rows();
    Matrix x(batch * ids.cols(), embedding.cols());
    for (Eigen::Index t = 0; t < ids.cols(); ++t)
        for (Eigen::Index b = 0; b < batch; ++b) x.row(t * batch + b) = embedding.row(ids(b, t));
    return x;
}

void run_direction(const Matrix& inputs, const Matrix& wx, const Matrix& wh, const Matrix& bias, Eigen::Index batch,
                   Eigen::Index steps, bool reverse, DirectionCache& cache) {
    const Eigen::Index units = wh.rows();
    cache.gates.assign(static_cast<std::size_t>(steps), Matrix());
    cache.cell.assign(static_cast<std::size_t>(steps), Matrix());
    cache.cell_tanh.assign(static_cast<std::size_t>(steps), Matrix());
    cache.hidden.assign(static_cast<std::size_t>(steps), Matrix());

    Matrix projected = inputs * wx;
    projected.rowwise() += bias.row(0);
    Matrix h = Matrix::Zero(batch, units);
    Matrix c = Matrix::Zero(batch, units);
    for (Eigen::Index s = 0; s < steps; ++s) {
        const Eigen::Index ti = reverse ? steps - 1 - s : s;
        const auto t = static_cast<std::size_t>(ti);
        Matrix z = projected.middleRows(ti * batch, batch);
        z.noalias() += h * wh;
        z.leftCols(2 * units) = sigmoid(z.leftCols(2 * units).array()).matrix();
        z.middleCols(2 * units, units) = z.middleCols(2 * units, units).array().tanh().matrix();
        z.rightCols(units) = sigmoid(z.rightCols(units).array()).matrix();

        const auto i = z.leftCols(units).array();
        const auto f = z.middleCols(units, units).array();
        const auto g = z.middleCols(2 * units, units).array();
        const auto o = z.rightCols(units).array();
        c = (f * c.array() + i * g).matrix();
        Matrix tc = c.array().tanh().matrix();
        h = (o * tc.array()).matrix();

        cache.gates[t] = std::move(z);
        cache.cell[t] = c;
        cache.cell_tanh[t] = std::move(tc);
        cache.hidden[t] = h;
    }
}

// Dropout keep-mask for one example, independent of how the batch is sliced.
void example_mask(std::uint64_t dropout_seed, std::size_t example, double rate, Eigen::Index steps,
                  Eigen::Index width, std::vector<Matrix>& mask, Eigen::Index row) {
    Rng rng(mix_seed(dropout_seed, example));
    const double keep = 1.0 / (1.0 - rate);
    for (Eigen::Index t = 0; t < steps; ++t)
        for (Eigen::Index j = 0; j < width; ++j)
            mask[static_cast<std::size_t>(t)](row, j) = rng.uniform() < rate ? 0.0 : keep;
}

Cache run_forward(const Parameters& p, const ModelConfig& cfg, const IdMatrix& ids, bool train_mode,
                  std::uint64_t dropout_seed, std::size_t example_offset) {
    const Eigen::Index batch = ids.rows();
    const Eigen::Index steps = ids.cols();
    const auto units = static_cast<Eigen::Index>(cfg.recurrent_units);
    Cache cache;
    cache.inputs = gather_all(p.embedding, ids);
    run_direction(cache.inputs, p.fwd_wx, p.fwd_wh, p.fwd_b, batch, steps, false, cache.fwd);
    run_direction(cache.inputs, p.bwd_wx, p.bwd_wh, p.bwd_b, batch, steps, true, cache.bwd);

    const bool dropout = train_mode && cfg.dropout_rate > 0.0;
    if (dropout) {
        cache.mask.assign(static_cast<std::size_t>(steps), Matrix(batch, 2 * units));
        for (Eigen::Index b = 0; b < batch; ++b)
            example_mask(dropout_seed, example_offset + static_cast<std::size_t>(b), cfg.dropout_rate, steps,
                         2 * units, cache.mask, b);
    }

    cache.output.resize(static_cast<std::size_t>(steps));
    Matrix scores(batch, steps);
    for (Eigen::Index t = 0; t < steps; ++t) {
        const auto ti = static_cast<std::size_t>(t);
        Matrix out(batch, 2 * units);
        out.leftCols(units) = cache.fwd.hidden[ti];
        out.rightCols(units) = cache.bwd.hidden[ti];
        if (dropout) out.array() *= cache.mask[ti].array();
        scores.col(t) = out * p.att_w;
        cache.output[ti] = std::move(out);
    }
    scores.array() += p.att_b(0, 0);

    cache.alpha.resize(batch, steps);
    for (Eigen::Index b = 0; b < batch; ++b) {
        const double mx = scores.row(b).maxCoeff();
        cache.alpha.row(b) = (scores.row(b).array() - mx).exp().matrix();
        cache.alpha.row(b) /= cache.alpha.row(b).sum();
    }

    cache.context = Matrix::Zero(batch, 2 * units);
    for (Eigen::Index t = 0; t < steps; ++t)
        cache.context.array() += cache.output[static_cast<std::size_t>(t)].array().colwise() * cache.alpha.col(t).array();

    Matrix pre = cache.context * p.dense_w;
    pre.rowwise() += p.dense_b.row(0);
    cache.dense = pre.array().tanh().matrix();
    Matrix logits = cache.dense * p.out_w;
    logits.rowwise() += p.out_b.row(0);
    cache.probs = sigmoid(logits.array()).matrix();
    return cache;
}

void backward_direction(const Matrix& inputs, const Matrix& wx, const Matrix& wh, const IdMatrix& ids, bool reverse,
                        const DirectionCache& cache, const std::vector<Matrix>& d_hidden, Matrix& g_wx,
                        Matrix& g_wh, Matrix& g_b, Matrix& g_embedding) {
    const Eigen::Index batch = ids.rows();
    const Eigen::Index steps = ids.cols();
    const Eigen::Index units = wh.rows();
    Matrix dh_next = Matrix::Zero(batch, units);
    Matrix dc_next = Matrix::Zero(batch, units);
    const Matrix zeros = Matrix::Zero(batch, units);
    // Gate gradients and previous hidden states, stacked like the inputs.
    Matrix dz_all(batch * steps, 4 * units);
    Matrix h_prev_all(batch * steps, units);

    // reverse of processing order
    for (Eigen::Index s = steps - 1; s >= 0; --s) {
        const Eigen::Index ti = reverse ? steps - 1 - s : s;
        const auto t = static_cast<std::size_t>(ti);
        const bool first = s == 0;
        const std::size_t prev = reverse ? t + 1 : t - 1;
        const Matrix& c_prev = first ? zeros : cache.cell[prev];
        h_prev_all.middleRows(ti * batch, batch) = first ? zeros : cache.hidden[prev];

        const auto& gates = cache.gates[t];
        const auto i = gates.leftCols(units).array();
        const auto f = gates.middleCols(units, units).array();
        const auto g = gates.middleCols(2 * units, units).array();
        const auto o = gates.rightCols(units).array();
        const auto tc = cache.cell_tanh[t].array();

        const Eigen::ArrayXXd dh = d_hidden[t].array() + dh_next.array();
        const Eigen::ArrayXXd dc = dc_next.array() + dh * o * (1.0 - tc * tc);
        auto dz = dz_all.middleRows(ti * batch, batch);
        dz.leftCols(units) = (dc * g * i * (1.0 - i)).matrix();
        dz.middleCols(units, units) = (dc * c_prev.array() * f * (1.0 - f)).matrix();
        dz.middleCols(2 * units, units) = (dc * i * (1.0 - g * g)).matrix();
        dz.rightCols(units) = (dh * tc * o * (1.0 - o)).matrix();
        dc_next = (dc * f).matrix();
        dh_next.noalias() = dz * wh.transpose();
    }

    g_wx.noalias() += inputs.transpose() * dz_all;
    g_wh.noalias() += h_prev_all.transpose() * dz_all;
    g_b += dz_all.colwise().sum();
    const Matrix dx = dz_all * wx.transpose();
    for (Eigen::Index t = 0; t < steps; ++t)
        for (Eigen::Index b = 0; b < batch; ++b) g_embedding.row(ids(b, t)) += dx.row(t * batch + b);
}

// Accumulates gradients of (sum of per-cell losses) * scale into `grads`
// and returns the unscaled loss sum.
double accumulate_slice(const Parameters& p, const ModelConfig& cfg, const IdMatrix& ids, const Matrix& targets,
                        const LossWeights& w, bool train_mode, std::uint64_t dropout_seed, std::size_t offset,
                        double scale, Parameters& grads, Matrix& probs_out) {
    const Eigen::Index batch = ids.rows();
    const Eigen::Index steps = ids.cols();
    const auto units = static_cast<Eigen::Index>(cfg.recurrent_units);
    const auto labels = static_cast<Eigen::Index>(cfg.num_labels);
    Cache cache = run_forward(p, cfg, ids, train_mode, dropout_seed, offset);
    probs_out = cache.probs;

    double loss_sum = 0.0;
    Matrix d_logits(batch, labels);
    for (Eigen::Index b = 0; b < batch; ++b) {
        for (Eigen::Index k = 0; k < labels; ++k) {
            const double prob = cache.probs(b, k);
            const double y = targets(b, k);
            const double wp = w.positive[static_cast<std::size_t>(k)];
            const double wn = w.negative[static_cast<std::size_t>(k)];
            const double pc = std::clamp(prob, kProbClamp, 1.0 - kProbClamp);
            loss_sum -= wp * y * std::log(pc) + wn * (1.0 - y) * std::log(1.0 - pc);
            const bool inside = prob > kProbClamp && prob < 1.0 - kProbClamp;
            d_logits(b, k) = inside ? scale * (-wp * y * (1.0 - prob) + wn * (1.0 - y) * prob) : 0.0;
        }
    }

    grads.out_w.noalias() += cache.dense.transpose() * d_logits;
    grads.out_b += d_logits.colwise().sum();
    const Matrix d_dense = ((d_logits * p.out_w.transpose()).array() * (1.0 - cache.dense.array().square())).matrix();
    grads.dense_w.noalias() += cache.context.transpose() * d_dense;
    grads.dense_b += d_dense.colwise().sum();
    const Matrix d_context = d_dense * p.dense_w.transpose();

    // attention: context = sum_t alpha_t * output_t, alpha = softmax(scores)
    Matrix d_alpha(batch, steps);
    for (Eigen::Index t = 0; t < steps; ++t)
        d_alpha.col(t) = (cache.output[static_cast<std::size_t>(t)].array() * d_context.array()).rowwise().sum().matrix();
    const Eigen::ArrayXd inner = (cache.alpha.array() * d_alpha.array()).rowwise().sum();
    const Matrix d_scores = (cache.alpha.array() * (d_alpha.array().colwise() - inner)).matrix();
    grads.att_b(0, 0) += d_scores.sum();

    std::vector<Matrix> d_fwd(static_cast<std::size_t>(steps)), d_bwd(static_cast<std::size_t>(steps));
    for (Eigen::Index t = 0; t < steps; ++t) {
        const auto ti = static_cast<std::size_t>(t);
        grads.att_w.noalias() += cache.output[ti].transpose() * d_scores.col(t);
        Matrix d_out = (d_context.array().colwise() * cache.alpha.col(t).array()).matrix();
        d_out.noalias() += d_scores.col(t) * p.att_w.transpose();
        if (!cache.mask.empty()) d_out.array() *= cache.mask[ti].array();
        d_fwd[ti] = d_out.leftCols(units);
        d_bwd[ti] = d_out.rightCols(units);
    }

    backward_direction(cache.inputs, p.fwd_wx, p.fwd_wh, ids, false, cache.fwd, d_fwd, grads.fwd_wx, grads.fwd_wh, grads.fwd_b,
                       grads.embedding);
    backward_direction(cache.inputs, p.bwd_wx, p.bwd_wh, ids, true, cache.bwd, d_bwd, grads.bwd_wx, grads.bwd_wh, grads.bwd_b,
                       grads.embedding);
    return loss_sum;
}

void check_ids(const IdMatrix& ids, const ModelConfig& cfg) {
    if (ids.rows() == 0) throw ShapeError("empty batch");
    if (ids.cols() != static_cast<Eigen::Index>(cfg.max_len))
        throw ShapeError("sequence length " + std::to_string(ids.cols()) + " != max_len " + std::to_string(cfg.max_len));
    for (Eigen::Index i = 0; i < ids.size(); ++i)
        if (ids.data()[i] < 0 || static_cast<std::size_t>(ids.data()[i]) >= cfg.vocab_size)
            throw ShapeError("token id " + std::to_string(ids.data()[i]) + " outside vocabulary");
}

}  // namespace

void ModelConfig::validate() const {
    if (vocab_size < 2 || embed_dim < 1 || recurrent_units < 1 || dense_units < 1 || max_len < 1 || num_labels < 1)
        throw ValidationError("model dimensions must be >= 1 (vocab >= 2)");
    if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) throw ValidationError("dropout_rate must lie in [0, 1)");
}

Parameters Parameters::zeros_like() const {
    Parameters z = *this;
    z.for_each([](std::string_view, Matrix& m) { m.setZero(); });
    return z;
}

std::size_t Parameters::count() const {
    std::size_t n = 0;
    for_each([&](std::string_view, const Matrix& m) { n += static_cast<std::size_t>(m.size()); });
    return n;
}

bool Parameters::all_finite() const {
    bool ok = true;
    for_each([&](std::string_view, const Matrix& m) { ok = ok && m.allFinite(); });
    return ok;
}

bool Parameters::operator==(const Parameters& other) const {
    std::vector<const Matrix*> mine, theirs;
    for_each([&](std::string_view, const Matrix& m) { mine.push_back(&m); });
    other.for_each([&](std::string_view, const Matrix& m) { theirs.push_back(&m); });
    for (std::size_t i = 0; i < mine.size(); ++i) {
        if (mine[i]->rows() != theirs[i]->rows() || mine[i]->cols() != theirs[i]->cols()) return false;
        if (!std::equal(mine[i]->data(), mine[i]->data() + mine[i]->size(), theirs[i]->data())) return false;
    }
    return true;
}

Model init_model(const ModelConfig& cfg, const AlignedEmbeddings* pretrained) {
    cfg.validate();
    const auto v = static_cast<Eigen::Index>(cfg.vocab_size);
    const auto e = static_cast<Eigen::Index>(cfg.embed_dim);
    const auto h = static_cast<Eigen::Index>(cfg.recurrent_units);
    const auto d = static_cast<Eigen::Index>(cfg.dense_units);
    const auto k = static_cast<Eigen::Index>(cfg.num_labels);

    Model model;
    model.config = cfg;
    auto& p = model.params;
    Rng rng(cfg.seed);

    p.embedding = Matrix(v, e);
    fill_uniform(p.embedding, rng, 0.05);
    p.embedding.row(0).setZero();
    if (pretrained) {
        if (pretrained->values.cols() != e)
            throw DimMismatch("embedding width " + std::to_string(pretrained->values.cols()) + " != embed_dim " +
                              std::to_string(e));
        if (pretrained->values.rows() != v || pretrained->found.size() != cfg.vocab_size)
            throw DimMismatch("embedding rows do not match the vocabulary size");
        for (Eigen::Index r = 1; r < v; ++r)
            if (pretrained->found[static_cast<std::size_t>(r)]) p.embedding.row(r) = pretrained->values.row(r);
    }

    for (auto [wx, wh, b] : {std::tuple{&p.fwd_wx, &p.fwd_wh, &p.fwd_b}, std::tuple{&p.bwd_wx, &p.bwd_wh, &p.bwd_b}}) {
        *wx = Matrix(e, 4 * h);
        *wh = Matrix(h, 4 * h);
        glorot(*wx, rng);
        glorot(*wh, rng);
        *b = Matrix::Zero(1, 4 * h);
        b->middleCols(h, h).setOnes();
    }
    p.att_w = Matrix(2 * h, 1);
    glorot(p.att_w, rng);
    p.att_b = Matrix::Zero(1, 1);
    p.dense_w = Matrix(2 * h, d);
    glorot(p.dense_w, rng);
    p.dense_b = Matrix::Zero(1, d);
    p.out_w = Matrix(d, k);
    glorot(p.out_w, rng);
    p.out_b = Matrix::Zero(1, k);
    return model;
}

IdMatrix make_batch(std::span<const EncodedFindings> inputs, const ModelConfig& cfg) {
    IdMatrix ids(static_cast<Eigen::Index>(inputs.size()), static_cast<Eigen::Index>(cfg.max_len));
    for (std::size_t b = 0; b < inputs.size(); ++b) {
        if (inputs[b].token_ids.size() != cfg.max_len)
            throw ShapeError("encoded length " + std::to_string(inputs[b].token_ids.size()) + " != max_len " +
                             std::to_string(cfg.max_len));
        for (std::size_t t = 0; t < cfg.max_len; ++t)
            ids(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(t)) = inputs[b].token_ids[t];
    }
    return ids;
}

ForwardResult forward(const Parameters& params, const ModelConfig& cfg, const IdMatrix& ids, bool train_mode,
                      std::uint64_t dropout_seed) {
    check_ids(ids, cfg);
    ForwardResult out;
    out.probs.resize(ids.rows(), static_cast<Eigen::Index>(cfg.num_labels));
    out.attention.resize(ids.rows(), ids.cols());
    constexpr Eigen::Index kSlice = 32;
    for (Eigen::Index start = 0; start < ids.rows(); start += kSlice) {
        const Eigen::Index n = std::min(kSlice, ids.rows() - start);
        const IdMatrix slice = ids.middleRows(start, n);
        Cache cache = run_forward(params, cfg, slice, train_mode, dropout_seed, static_cast<std::size_t>(start));
        out.probs.middleRows(start, n) = cache.probs;
        out.attention.middleRows(start, n) = cache.alpha;
    }
    return out;
}

ForwardResult forward(const Model& model, std::span<const EncodedFindings> batch, bool train_mode,
                      std::uint64_t dropout_seed) {
    return forward(model.params, model.config, make_batch(batch, model.config), train_mode, dropout_seed);
}

LossWeights LossWeights::uniform(std::size_t labels) {
    return {std::vector<double>(labels, 1.0), std::vector<double>(labels, 1.0)};
}

LossWeights LossWeights::inverse_frequency(const std::vector<std::vector<double>>& targets, std::size_t labels) {
    LossWeights w = uniform(labels);
    if (targets.empty()) return w;
    std::vector<double> raw(labels, 0.0);
    double max_raw = 0.0;
    for (std::size_t k = 0; k < labels; ++k) {
        double pos = 0.0;
        for (const auto& row : targets) pos += row.at(k) > 0.5 ? 1.0 : 0.0;
        if (pos > 0.0) raw[k] = static_cast<double>(targets.size()) / pos;
        max_raw = std::max(max_raw, raw[k]);
    }
    // labels without positives get the largest observed weight
    for (auto& r : raw)
        if (r == 0.0) r = max_raw > 0.0 ? max_raw : 1.0;
    double mean = 0.0;
    for (double r : raw) mean += r;
    mean /= static_cast<double>(labels);
    for (std::size_t k = 0; k < labels; ++k) w.positive[k] = raw[k] / mean;
    return w;
}

double loss(const Matrix& probs, const Matrix& targets, const LossWeights& weights) {
    if (probs.rows() != targets.rows() || probs.cols() != targets.cols()) throw ShapeError("probs/targets shape mismatch");
    if (weights.positive.size() != static_cast<std::size_t>(probs.cols()) ||
        weights.negative.size() != static_cast<std::size_t>(probs.cols()))
        throw ShapeError("loss weights do not match label count");
    double total = 0.0;
    for (Eigen::Index b = 0; b < probs.rows(); ++b)
        for (Eigen::Index k = 0; k < probs.cols(); ++k) {
            const double p = std::clamp(probs(b, k), kProbClamp, 1.0 - kProbClamp);
            const double y = targets(b, k);
            total -= weights.positive[static_cast<std::size_t>(k)] * y * std::log(p) +
                     weights.negative[static_cast<std::size_t>(k)] * (1.0 - y) * std::log(1.0 - p);
        }
    return total / static_cast<double>(probs.size());
}

GradientResult gradients(const Parameters& params, const ModelConfig& cfg, const IdMatrix& ids,
                         const Matrix& targets, const LossWeights& weights, bool train_mode,
                         std::uint64_t dropout_seed, std::size_t micro_batch) {
    check_ids(ids, cfg);
    if (targets.rows() != ids.rows() || targets.cols() != static_cast<Eigen::Index>(cfg.num_labels))
        throw ShapeError("targets shape does not match batch");
    if (weights.positive.size() != cfg.num_labels || weights.negative.size() != cfg.num_labels)
        throw ShapeError("loss weights do not match label count");
    micro_batch = std::max<std::size_t>(micro_batch, 1);

    GradientResult result;
    result.grads = params.zeros_like();
    result.probs.resize(ids.rows(), static_cast<Eigen::Index>(cfg.num_labels));
    const double scale = 1.0 / static_cast<double>(targets.size());
    double loss_sum = 0.0;
    for (Eigen::Index start = 0; start < ids.rows(); start += static_cast<Eigen::Index>(micro_batch)) {
        const Eigen::Index n = std::min(static_cast<Eigen::Index>(micro_batch), ids.rows() - start);
        Matrix probs;
        loss_sum += accumulate_slice(params, cfg, ids.middleRows(start, n), targets.middleRows(start, n), weights,
                                     train_mode, dropout_seed, static_cast<std::size_t>(start), scale,
                                     result.grads, probs);
        result.probs.middleRows(start, n) = probs;
    }
    result.loss = loss_sum * scale;
    return result;
}

Matrix to_matrix(const std::vector<std::vector<double>>& rows) {
    if (rows.empty()) return Matrix(0, 0);
    Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows[0].size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != rows[0].size()) throw ShapeError("ragged rows");
        for (std::size_t j = 0; j < rows[i].size(); ++j)
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    }
    return m;
}

}  // namespace radlabel::nn
