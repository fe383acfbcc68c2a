#pragma once

#include <array>
#include <cstddef>
#include <iosfwd>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "radlabel/dictionary.hpp"
#include "radlabel/text.hpp"

namespace radlabel {

struct RbaConfig {
    /// Longest sentence (in tokens) allowed to cast a normal vote.
    std::size_t normal_length_threshold = 18;
    bool require_anatomy_for_multi_organ = true;
};

struct SentenceVerdict {
    std::set<std::size_t> disease_votes;
    bool abnormal_untracked = false;
    bool normal_vote = false;
    std::vector<TermHit> evidence;
};

struct OrganLabelSet {
    OrganSystem organ_system = OrganSystem::LungsPleura;
    std::array<bool, kDiseaseCount> disease_flags{};
    bool normal = false;
    bool uncertain = false;
    std::vector<SentenceVerdict> verdicts;  // one per findings sentence

    bool any_disease() const;
    /// Four disease flags then normal, as 0/1 targets.
    std::vector<double> targets() const;
    bool same_flags(const OrganLabelSet& other) const;
};

using OrganDictionaries = std::map<OrganSystem, Dictionary>;

/// Per-sentence logic. Multi-organ disease hits count when an anatomy term
/// co-occurs; single-organ hits count without one. A hit is suppressed by any
/// negation hit at an earlier token. The normal vote is considered only when
/// no disease counted.
SentenceVerdict classify_sentence(const std::vector<std::string>& tokens, const Dictionary& dict,
                                  const RbaConfig& cfg = {});
SentenceVerdict classify_sentence(const Sentence& sentence, const Dictionary& dict, const RbaConfig& cfg = {});

/// Aggregates sentence verdicts over the findings section. A report is
/// uncertain for an organ when it is neither disease-positive nor normal,
/// which includes reports whose only abnormality is untracked.
OrganLabelSet label_findings(const std::vector<Sentence>& sentences, const Dictionary& dict, const RbaConfig& cfg = {});

bool filter_by_protocol(const StructuredReport& report, OrganSystem organ);
bool filter_by_protocol(Protocol protocol, OrganSystem organ);

/// Labels every organ in `dicts` that passes the protocol filter (all of them
/// when `apply_protocol_filter` is false).
std::map<OrganSystem, OrganLabelSet> label_report(const StructuredReport& report, const OrganDictionaries& dicts,
                                                  const RbaConfig& cfg = {}, bool apply_protocol_filter = true);

/// One output line per (report, organ): report_id, organ, the four disease
/// flags by name, normal, uncertain, then optional evidence.
struct LabelRecord {
    std::string report_id;
    OrganSystem organ = OrganSystem::LungsPleura;
    std::array<bool, kDiseaseCount> disease_flags{};
    bool normal = false;
    bool uncertain = false;
    std::vector<std::string> evidence;

    static LabelRecord from(const std::string& report_id, const OrganLabelSet& labels, const Dictionary& dict,
                            const std::vector<Sentence>* sentences = nullptr);
    bool same_flags(const LabelRecord& other) const;
};

void write_label_record(std::ostream& out, const LabelRecord& record, const Dictionary& dict);
std::vector<LabelRecord> read_label_records(std::istream& in, const OrganDictionaries& dicts);

}  // namespace radlabel
