#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "radlabel/rba.hpp"
#include "radlabel/rng.hpp"
#include "radlabel/text.hpp"

namespace radlabel {

struct GenSpec {
    std::uint64_t seed = 0;
    std::size_t report_count = 1000;
    /// Marginal probability of each disease label, per organ.
    std::map<OrganSystem, std::array<double, kDiseaseCount>> prevalence;
    /// Probability that an organ is explicitly normal.
    std::map<OrganSystem, double> normal_prevalence;
    /// Chance of a negated mention for each absent disease.
    double negated_rate = 0.3;
    /// Chance that two adjacent findings sentences are fused into one.
    double run_on_rate = 0.0;
    /// Per-word chance of a character swap in words outside the dictionaries.
    double misspelling_rate = 0.0;
    std::size_t distractor_min = 2;
    std::size_t distractor_max = 6;
    /// Distinct subjects as a fraction of the report count.
    double subject_ratio = 0.6;

    static GenSpec defaults();
    /// Throws InconsistentSpec when normal plus any disease prevalence exceeds
    /// one for an organ, ConfigError for other out-of-range values.
    void validate() const;
};

struct GeneratedReport {
    ReportRecord record;
    StructuredReport report;
    /// Truth for every organ the protocol covers.
    std::map<OrganSystem, LabelRecord> truth;
};

std::vector<GeneratedReport> generate_corpus(const GenSpec& spec, const OrganDictionaries& dicts);

struct RoundTrip {
    std::size_t comparisons = 0;  // (report, organ) pairs
    std::size_t agreements = 0;
    std::size_t rba_uncertain = 0;
    double agreement_rate() const { return static_cast<double>(agreements) / static_cast<double>(comparisons); }
    double uncertain_fraction() const {
        return static_cast<double>(rba_uncertain) / static_cast<double>(comparisons);
    }
};

/// Labels each report with the rule engine and compares against the
/// generator's truth. Throws EmptyEval on an empty corpus.
RoundTrip rba_roundtrip_check(const std::vector<GeneratedReport>& corpus, const OrganDictionaries& dicts,
                              const RbaConfig& cfg = {});

enum class TemplateKind { Positive, Negated, Normal, Untracked, Distractor };

struct SentenceTemplate {
    TemplateKind kind = TemplateKind::Distractor;
    std::optional<OrganSystem> organ;
    int disease = -1;  // label index for Positive and Negated
    std::string_view text;
};

/// The full sentence bank. Placeholders: {side}, {Side}, {lobe}, {mm}, {cm}.
const std::vector<SentenceTemplate>& template_bank();

std::string render_template(std::string_view text, Rng& rng);
/// Every filler combination of one template.
std::vector<std::string> expand_template(std::string_view text);

void write_truth_records(std::ostream& out, const std::vector<GeneratedReport>& corpus, const OrganDictionaries& dicts);

}  // namespace radlabel
