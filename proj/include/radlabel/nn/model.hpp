#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "radlabel/text.hpp"

namespace radlabel::nn {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct ModelConfig {
    std::size_t vocab_size = 2;
    std::size_t embed_dim = 200;
    std::size_t recurrent_units = 200;  // per direction
    std::size_t dense_units = 64;
    double dropout_rate = 0.2;
    std::size_t max_len = 650;
    std::size_t num_labels = 5;
    std::uint64_t seed = 0;

    void validate() const;
    bool operator==(const ModelConfig&) const = default;
};

/// Every trainable tensor. Vectors are stored as 1 x n rows, the attention
/// projection as a 2H x 1 column.
struct Parameters {
    Matrix embedding;  // vocab x E
    Matrix fwd_wx, fwd_wh, fwd_b;  // E x 4H, H x 4H, 1 x 4H; gate order i, f, g, o
    Matrix bwd_wx, bwd_wh, bwd_b;
    Matrix att_w, att_b;       // 2H x 1, 1 x 1
    Matrix dense_w, dense_b;   // 2H x D, 1 x D
    Matrix out_w, out_b;       // D x K, 1 x K

    template <class F>
    void for_each(F&& f) {
        f(std::string_view("embedding"), embedding);
        f(std::string_view("lstm_fwd/kernel"), fwd_wx);
        f(std::string_view("lstm_fwd/recurrent_kernel"), fwd_wh);
        f(std::string_view("lstm_fwd/bias"), fwd_b);
        f(std::string_view("lstm_bwd/kernel"), bwd_wx);
        f(std::string_view("lstm_bwd/recurrent_kernel"), bwd_wh);
        f(std::string_view("lstm_bwd/bias"), bwd_b);
        f(std::string_view("attention/kernel"), att_w);
        f(std::string_view("attention/bias"), att_b);
        f(std::string_view("dense/kernel"), dense_w);
        f(std::string_view("dense/bias"), dense_b);
        f(std::string_view("output/kernel"), out_w);
        f(std::string_view("output/bias"), out_b);
    }
    template <class F>
    void for_each(F&& f) const {
        const_cast<Parameters*>(this)->for_each(
            [&](std::string_view name, Matrix& m) { f(name, static_cast<const Matrix&>(m)); });
    }

    /// Same shapes, all zeros.
    Parameters zeros_like() const;
    std::size_t count() const;
    bool all_finite() const;
    bool operator==(const Parameters& other) const;
};

struct TrainingState {
    Parameters adam_m;
    Parameters adam_v;
    std::uint64_t step = 0;
    int epoch = 0;
    double best_val_loss = 0.0;
    bool has_moments = false;
};

struct Model {
    ModelConfig config;
    Parameters params;
    TrainingState state;
};

/// Pretrained vectors aligned to a vocabulary.
struct AlignedEmbeddings {
    Matrix values;            // vocab x dim; rows without a match are zero
    std::vector<bool> found;  // per vocabulary id
    std::size_t hits = 0;
    std::size_t misses = 0;
};

/// Embeddings uniform in [-0.05, 0.05] with a zero pad row; kernels Glorot
/// uniform; biases zero except the forget gate (one). Pretrained rows replace
/// the random rows they align with.
Model init_model(const ModelConfig& cfg, const AlignedEmbeddings* pretrained = nullptr);

/// Token-id batch, rows are examples.
using IdMatrix = Eigen::Matrix<std::int32_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

IdMatrix make_batch(std::span<const EncodedFindings> inputs, const ModelConfig& cfg);

struct ForwardResult {
    Matrix probs;      // batch x num_labels
    Matrix attention;  // batch x max_len
};

/// Dropout is applied only in train mode, with a mask drawn from
/// `dropout_seed`.
ForwardResult forward(const Model& model, std::span<const EncodedFindings> batch, bool train_mode = false,
                      std::uint64_t dropout_seed = 0);
ForwardResult forward(const Parameters& params, const ModelConfig& cfg, const IdMatrix& ids, bool train_mode,
                      std::uint64_t dropout_seed);

/// Per-label weights of the positive and negative terms of the loss.
struct LossWeights {
    std::vector<double> positive;
    std::vector<double> negative;

    static LossWeights uniform(std::size_t labels);
    /// Inverse positive frequency, normalized to mean 1; negatives weigh 1.
    static LossWeights inverse_frequency(const std::vector<std::vector<double>>& targets, std::size_t labels);
};

inline constexpr double kProbClamp = 1e-7;

/// Mean over batch and labels of -[w+ y log p + w- (1 - y) log(1 - p)], p
/// clamped to [1e-7, 1 - 1e-7].
double loss(const Matrix& probs, const Matrix& targets, const LossWeights& weights);

struct GradientResult {
    double loss = 0.0;
    Parameters grads;
    Matrix probs;
};

/// Exact reverse-mode gradients of `loss` with respect to every parameter.
/// Large batches are processed in slices of `micro_batch` examples.
GradientResult gradients(const Parameters& params, const ModelConfig& cfg, const IdMatrix& ids,
                         const Matrix& targets, const LossWeights& weights, bool train_mode = false,
                         std::uint64_t dropout_seed = 0, std::size_t micro_batch = 32);

Matrix to_matrix(const std::vector<std::vector<double>>& rows);

}  // namespace radlabel::nn
