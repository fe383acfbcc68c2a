#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace radlabel::nn {

struct AttentionTrace {
    std::vector<double> weights;      // one per model position (max_len)
    std::vector<std::string> tokens;  // source tokens occupying the first positions
};

/// Pairs an attention row with the model tokens of `findings`, truncated to
/// the row length.
AttentionTrace make_trace(std::span<const double> attention_row, std::string_view findings);

inline constexpr int kAttentionBuckets = 5;

/// Shade per token: 0 for zero weight, otherwise 1..5 by position between the
/// smallest and largest weight. Equal weights all land in bucket 1.
std::vector<int> attention_buckets(std::span<const double> weights);

enum class RenderFormat { Ansi, Html };

/// Shades each token by its bucket. Throws AlignmentError when the token
/// count differs from the trace.
std::string render_attention(const std::vector<std::string>& tokens, const AttentionTrace& trace, RenderFormat format);

}  // namespace radlabel::nn
