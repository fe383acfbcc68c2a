#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "radlabel/text.hpp"

namespace radlabel {

struct ConfusionCounts {
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t tn = 0;
    std::size_t fn = 0;

    std::size_t total() const { return tp + fp + tn + fn; }
};

struct BinaryMetrics {
    double accuracy = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    double fpr = 0.0;
};

/// Zero-denominator conventions: precision, recall, f1 and fpr are 0.
BinaryMetrics binary_metrics(const ConfusionCounts& counts);

ConfusionCounts confusion(std::span<const double> scores, std::span<const int> labels, double threshold = 0.5);

/// Mann-Whitney AUC with ties worth one half.
double roc_auc(std::span<const double> scores, std::span<const int> labels);

struct AucInterval {
    double auc = 0.0;
    double variance = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
};

/// Single-curve DeLong interval: placement values per positive and negative
/// example, unbiased sample variances, normal-quantile bounds clamped to
/// [0, 1]. Zero variance or alpha = 1 collapses the interval onto the AUC.
AucInterval delong_ci(std::span<const double> scores, std::span<const int> labels, double alpha = 0.05);

/// Inverse standard normal CDF.
double normal_quantile(double p);

enum class Split { Train, Val, Test };
std::string_view to_string(Split s);

struct SplitAssignment {
    std::map<std::string, Split> by_subject;
    std::uint64_t seed = 0;
    std::array<double, 3> fractions{0.70, 0.15, 0.15};

    Split of(const std::string& subject_id) const { return by_subject.at(subject_id); }
    std::size_t count(Split s) const;
};

/// Distinct subjects are sorted, shuffled with the seed and cut by cumulative
/// fraction of the subject count.
SplitAssignment split_by_subject(const std::vector<std::string>& subject_ids,
                                 std::array<double, 3> fractions = {0.70, 0.15, 0.15}, std::uint64_t seed = 0);
SplitAssignment split_by_subject(const std::vector<StructuredReport>& reports,
                                 std::array<double, 3> fractions = {0.70, 0.15, 0.15}, std::uint64_t seed = 0);

struct LabelEval {
    std::string label;
    std::size_t positive_count = 0;
    BinaryMetrics metrics;
    bool auc_defined = false;  // false when one class is absent
    AucInterval auc;
};

struct EvalReport {
    std::vector<LabelEval> labels;
};

/// probs and targets are row-major [examples x labels].
EvalReport evaluate(const std::vector<std::vector<double>>& probs, const std::vector<std::vector<double>>& targets,
                    const std::vector<std::string>& label_names, double alpha = 0.05, double threshold = 0.5);

/// Columns: label, # pos, AUC (95% CI), accuracy, F1.
void write_eval_table(std::ostream& out, const EvalReport& report);
/// One JSON object per label.
void write_eval_records(std::ostream& out, const EvalReport& report);

}  // namespace radlabel
