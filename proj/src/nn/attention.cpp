#include "radlabel/nn/attention.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "radlabel/error.hpp"
#include "radlabel/text.hpp"

namespace radlabel::nn {

AttentionTrace make_trace(std::span<const double> attention_row, std::string_view findings) {
    AttentionTrace trace;
    trace.weights.assign(attention_row.begin(), attention_row.end());
    trace.tokens = rnn_tokenize(findings);
    if (trace.tokens.size() > trace.weights.size()) trace.tokens.resize(trace.weights.size());
    return trace;
}

std::vector<int> attention_buckets(std::span<const double> weights) {
    std::vector<int> out(weights.size(), 0);
    if (weights.empty()) return out;
    const auto [lo_it, hi_it] = std::minmax_element(weights.begin(), weights.end());
    const double lo = *lo_it, hi = *hi_it;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        if (weights[i] <= 0.0) continue;
        if (hi <= lo) {
            out[i] = 1;
            continue;
        }
        const int b = 1 + static_cast<int>(std::floor(kAttentionBuckets * (weights[i] - lo) / (hi - lo)));
        out[i] = std::min(b, kAttentionBuckets);
    }
    return out;
}

namespace {

std::string html_escape(std::string_view s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

// 256-colour backgrounds from pale to deep red
constexpr int kAnsiShade[kAttentionBuckets + 1] = {0, 224, 217, 210, 203, 196};
constexpr double kHtmlAlpha[kAttentionBuckets + 1] = {0.0, 0.15, 0.3, 0.5, 0.7, 0.9};

}  // namespace

std::string render_attention(const std::vector<std::string>& tokens, const AttentionTrace& trace, RenderFormat format) {
    if (tokens.size() != trace.tokens.size())
        throw AlignmentError(std::to_string(tokens.size()) + " tokens but the trace covers " +
                             std::to_string(trace.tokens.size()));
    // buckets are relative to the weights on real tokens only
    const auto buckets =
        attention_buckets(std::span<const double>(trace.weights.data(), std::min(tokens.size(), trace.weights.size())));

    std::string out;
    if (format == RenderFormat::Html) out += "<p class=\"attention\">";
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (i) out += ' ';
        const int b = buckets[i];
        if (format == RenderFormat::Html) {
            out += "<span class=\"att-" + std::to_string(b) + "\" style=\"background-color: rgba(220, 30, 30, ";
            char alpha[8];
            std::snprintf(alpha, sizeof alpha, "%.2f", kHtmlAlpha[b]);
            out += alpha;
            out += ")\">" + html_escape(tokens[i]) + "</span>";
        } else if (b == 0) {
            out += tokens[i];
        } else {
            out += "\x1b[48;5;" + std::to_string(kAnsiShade[b]) + "m" + tokens[i] + "\x1b[0m";
        }
    }
    if (format == RenderFormat::Html) out += "</p>\n";
    else out += '\n';
    return out;
}

}  // namespace radlabel::nn
