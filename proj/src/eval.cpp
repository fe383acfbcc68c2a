#include "radlabel/eval.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>

#include "json.hpp"

#include "radlabel/error.hpp"
#include "radlabel/rng.hpp"

namespace radlabel {

namespace {

void check_inputs(std::span<const double> scores, std::span<const int> labels) {
    if (scores.size() != labels.size()) throw ValidationError("scores and labels differ in length");
    std::size_t pos = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] != 0 && labels[i] != 1) throw ValidationError("labels must be 0 or 1");
        if (std::isnan(scores[i])) throw ValidationError("NaN score");
        pos += static_cast<std::size_t>(labels[i]);
    }
    if (pos == 0 || pos == labels.size()) throw DegenerateClasses("need at least one positive and one negative");
}

double sample_variance(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    return ss / static_cast<double>(v.size() - 1);
}

}  // namespace

BinaryMetrics binary_metrics(const ConfusionCounts& c) {
    const auto total = c.total();
    if (total == 0) throw EmptyEval("no evaluated examples");
    auto ratio = [](std::size_t num, std::size_t den) {
        return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
    };
    BinaryMetrics m;
    m.accuracy = ratio(c.tp + c.tn, total);
    m.precision = ratio(c.tp, c.tp + c.fp);
    m.recall = ratio(c.tp, c.tp + c.fn);
    m.f1 = m.precision + m.recall == 0.0 ? 0.0 : 2.0 * (m.precision * m.recall) / (m.precision + m.recall);
    m.fpr = ratio(c.fp, c.tn + c.fp);
    return m;
}

ConfusionCounts confusion(std::span<const double> scores, std::span<const int> labels, double threshold) {
    if (scores.size() != labels.size()) throw ValidationError("scores and labels differ in length");
    ConfusionCounts c;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        const bool pred = scores[i] >= threshold;
        const bool truth = labels[i] != 0;
        if (pred && truth) ++c.tp;
        else if (pred) ++c.fp;
        else if (truth) ++c.fn;
        else ++c.tn;
    }
    return c;
}

double roc_auc(std::span<const double> scores, std::span<const int> labels) {
    check_inputs(scores, labels);
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    // sum of midranks (1-based) of the positives
    double rank_sum = 0.0;
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
        const double midrank = 0.5 * static_cast<double>(i + 1 + j);
        for (std::size_t k = i; k < j; ++k)
            if (labels[order[k]] == 1) rank_sum += midrank;
        i = j;
    }
    const double m = static_cast<double>(std::count(labels.begin(), labels.end(), 1));
    const double n = static_cast<double>(labels.size()) - m;
    return (rank_sum - m * (m + 1.0) / 2.0) / (m * n);
}

AucInterval delong_ci(std::span<const double> scores, std::span<const int> labels, double alpha) {
    check_inputs(scores, labels);
    if (!(alpha > 0.0 && alpha <= 1.0)) throw ValidationError("alpha must lie in (0, 1]");

    std::vector<double> pos, neg;
    for (std::size_t i = 0; i < scores.size(); ++i) (labels[i] ? pos : neg).push_back(scores[i]);
    std::vector<double> pos_sorted = pos, neg_sorted = neg;
    std::sort(pos_sorted.begin(), pos_sorted.end());
    std::sort(neg_sorted.begin(), neg_sorted.end());
    const double m = static_cast<double>(pos.size());
    const double n = static_cast<double>(neg.size());

    // placement of a positive: share of negatives it beats; of a negative:
    // share of positives that beat it; ties count one half
    std::vector<double> v10, v01;
    v10.reserve(pos.size());
    v01.reserve(neg.size());
    for (double x : pos) {
        const auto lo = std::lower_bound(neg_sorted.begin(), neg_sorted.end(), x);
        const auto hi = std::upper_bound(neg_sorted.begin(), neg_sorted.end(), x);
        v10.push_back((static_cast<double>(lo - neg_sorted.begin()) + 0.5 * static_cast<double>(hi - lo)) / n);
    }
    for (double y : neg) {
        const auto lo = std::lower_bound(pos_sorted.begin(), pos_sorted.end(), y);
        const auto hi = std::upper_bound(pos_sorted.begin(), pos_sorted.end(), y);
        v01.push_back((static_cast<double>(pos_sorted.end() - hi) + 0.5 * static_cast<double>(hi - lo)) / m);
    }

    AucInterval out;
    out.auc = roc_auc(scores, labels);
    out.variance = sample_variance(v10) / m + sample_variance(v01) / n;
    const double z = normal_quantile(1.0 - alpha / 2.0);
    if (out.variance <= 0.0 || z <= 0.0) {
        out.ci_low = out.ci_high = out.auc;
        return out;
    }
    const double half = z * std::sqrt(out.variance);
    out.ci_low = std::clamp(out.auc - half, 0.0, 1.0);
    out.ci_high = std::clamp(out.auc + half, 0.0, 1.0);
    return out;
}

double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) throw ValidationError("quantile probability must lie in (0, 1)");
    if (p == 0.5) return 0.0;
    // Acklam's rational approximation, refined by one Halley step
    static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
                                   1.383577518672690e+02,  -3.066479806614716e+01, 2.506628277459239e+00};
    static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
                                   6.680131188771972e+01,  -1.328068155288572e+01};
    static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
                                   -2.549732539343734e+00, 4.374664141464968e+00,  2.938163982698783e+00};
    static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
                                   3.754408661907416e+00};
    constexpr double p_low = 0.02425;
    double x;
    if (p < p_low) {
        const double q = std::sqrt(-2.0 * std::log(p));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else if (p <= 1.0 - p_low) {
        const double q = p - 0.5;
        const double r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    } else {
        const double q = std::sqrt(-2.0 * std::log1p(-p));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    const double e = 0.5 * std::erfc(-x / std::sqrt(2.0)) - p;
    const double u = e * std::sqrt(2.0 * M_PI) * std::exp(x * x / 2.0);
    return x - u / (1.0 + x * u / 2.0);
}

std::string_view to_string(Split s) {
    switch (s) {
        case Split::Train: return "train";
        case Split::Val: return "val";
        case Split::Test: return "test";
    }
    return "";
}

std::size_t SplitAssignment::count(Split s) const {
    return static_cast<std::size_t>(
        std::count_if(by_subject.begin(), by_subject.end(), [s](const auto& kv) { return kv.second == s; }));
}

SplitAssignment split_by_subject(const std::vector<std::string>& subject_ids, std::array<double, 3> fractions,
                                 std::uint64_t seed) {
    for (double f : fractions)
        if (f < 0.0) throw ValidationError("split fractions must be non-negative");
    if (std::abs(fractions[0] + fractions[1] + fractions[2] - 1.0) > 1e-9)
        throw ValidationError("split fractions must sum to 1");

    const std::set<std::string> unique(subject_ids.begin(), subject_ids.end());
    std::vector<std::string> subjects(unique.begin(), unique.end());
    Rng rng(seed);
    rng.shuffle(subjects);

    const double total = static_cast<double>(subjects.size());
    const auto n_train = static_cast<std::size_t>(std::floor(fractions[0] * total + 1e-9));
    const auto n_train_val = static_cast<std::size_t>(std::floor((fractions[0] + fractions[1]) * total + 1e-9));

    SplitAssignment out;
    out.seed = seed;
    out.fractions = fractions;
    for (std::size_t i = 0; i < subjects.size(); ++i)
        out.by_subject[subjects[i]] = i < n_train ? Split::Train : i < n_train_val ? Split::Val : Split::Test;
    return out;
}

SplitAssignment split_by_subject(const std::vector<StructuredReport>& reports, std::array<double, 3> fractions,
                                 std::uint64_t seed) {
    std::vector<std::string> ids;
    ids.reserve(reports.size());
    for (const auto& r : reports) ids.push_back(r.subject_id);
    return split_by_subject(ids, fractions, seed);
}

EvalReport evaluate(const std::vector<std::vector<double>>& probs, const std::vector<std::vector<double>>& targets,
                    const std::vector<std::string>& label_names, double alpha, double threshold) {
    if (probs.size() != targets.size()) throw ShapeError("probs and targets differ in row count");
    if (probs.empty()) throw EmptyEval("no examples to evaluate");
    EvalReport report;
    for (std::size_t k = 0; k < label_names.size(); ++k) {
        std::vector<double> scores;
        std::vector<int> labels;
        for (std::size_t i = 0; i < probs.size(); ++i) {
            if (probs[i].size() != label_names.size() || targets[i].size() != label_names.size())
                throw ShapeError("row width differs from label count");
            scores.push_back(probs[i][k]);
            labels.push_back(targets[i][k] > 0.5 ? 1 : 0);
        }
        LabelEval le;
        le.label = label_names[k];
        le.positive_count = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 1));
        le.metrics = binary_metrics(confusion(scores, labels, threshold));
        if (le.positive_count > 0 && le.positive_count < labels.size()) {
            le.auc = delong_ci(scores, labels, alpha);
            le.auc_defined = true;
        }
        report.labels.push_back(std::move(le));
    }
    return report;
}

void write_eval_table(std::ostream& out, const EvalReport& report) {
    out << "label\t# Pos\tAUC (95% CI)\tAccuracy\tF1\n";
    for (const auto& l : report.labels) {
        std::ostringstream auc;
        auc << std::fixed << std::setprecision(4);
        if (l.auc_defined) auc << l.auc.auc << " (" << l.auc.ci_low << "-" << l.auc.ci_high << ")";
        else auc << "NA";
        std::ostringstream rest;
        rest << std::fixed << std::setprecision(4) << l.metrics.accuracy << '\t' << l.metrics.f1;
        out << l.label << '\t' << l.positive_count << '\t' << auc.str() << '\t' << rest.str() << '\n';
    }
}

void write_eval_records(std::ostream& out, const EvalReport& report) {
    for (const auto& l : report.labels) {
        nlohmann::ordered_json j;
        j["label"] = l.label;
        j["positive_count"] = l.positive_count;
        j["accuracy"] = l.metrics.accuracy;
        j["precision"] = l.metrics.precision;
        j["recall"] = l.metrics.recall;
        j["f1"] = l.metrics.f1;
        j["fpr"] = l.metrics.fpr;
        if (l.auc_defined) {
            j["auc"] = l.auc.auc;
            j["ci_low"] = l.auc.ci_low;
            j["ci_high"] = l.auc.ci_high;
        } else {
            j["auc"] = nullptr;
            j["ci_low"] = nullptr;
            j["ci_high"] = nullptr;
        }
        out << j.dump() << '\n';
    }
}

}  // namespace radlabel
