#include "radlabel/rba.hpp"

#include <algorithm>
#include <istream>
#include <ostream>

#include "json.hpp"

#include "radlabel/error.hpp"

namespace radlabel {

bool OrganLabelSet::any_disease() const {
    return std::any_of(disease_flags.begin(), disease_flags.end(), [](bool b) { return b; });
}

std::vector<double> OrganLabelSet::targets() const {
    std::vector<double> t;
    for (bool f : disease_flags) t.push_back(f ? 1.0 : 0.0);
    t.push_back(normal ? 1.0 : 0.0);
    return t;
}

bool OrganLabelSet::same_flags(const OrganLabelSet& other) const {
    return disease_flags == other.disease_flags && normal == other.normal && uncertain == other.uncertain;
}

SentenceVerdict classify_sentence(const std::vector<std::string>& tokens, const Dictionary& dict,
                                  const RbaConfig& cfg) {
    SentenceVerdict verdict;
    const auto hits = match_terms(tokens, dict);

    std::size_t first_negation = tokens.size();
    bool has_anatomy = false;
    bool has_normal = false;
    bool has_qualifier = false;
    for (const auto& h : hits) {
        switch (dict.entries[h.entry].category) {
            case Category::Negation: first_negation = std::min(first_negation, h.token_index); break;
            case Category::OrganAnatomy: has_anatomy = true; break;
            case Category::Normal: has_normal = true; break;
            case Category::Qualifier: has_qualifier = true; break;
            default: break;
        }
    }
    auto negated = [&](const TermHit& h) { return first_negation < h.token_index; };

    auto count = [&](const TermHit& h) {
        const auto& e = dict.entries[h.entry];
        if (e.target_label) verdict.disease_votes.insert(*e.target_label);
        else verdict.abnormal_untracked = true;
        verdict.evidence.push_back(h);
    };

    // multi-organ descriptors first, then single-organ
    const bool anatomy_ok = has_anatomy || !cfg.require_anatomy_for_multi_organ;
    for (const auto& h : hits)
        if (dict.entries[h.entry].category == Category::MultiOrganDisease && anatomy_ok && !negated(h)) count(h);
    for (const auto& h : hits)
        if (dict.entries[h.entry].category == Category::SingleOrganDisease && !negated(h)) count(h);

    if (!verdict.disease_votes.empty() || verdict.abnormal_untracked) return verdict;

    const bool unnegated_disease = std::any_of(hits.begin(), hits.end(), [&](const TermHit& h) {
        return is_disease(dict.entries[h.entry].category) && !negated(h);
    });
    if (has_anatomy && has_normal && !has_qualifier && !unnegated_disease &&
        tokens.size() <= cfg.normal_length_threshold) {
        verdict.normal_vote = true;
        for (const auto& h : hits) {
            const auto c = dict.entries[h.entry].category;
            if (c == Category::OrganAnatomy || c == Category::Normal) verdict.evidence.push_back(h);
        }
    }
    return verdict;
}

SentenceVerdict classify_sentence(const Sentence& sentence, const Dictionary& dict, const RbaConfig& cfg) {
    return classify_sentence(sentence.tokens, dict, cfg);
}

OrganLabelSet label_findings(const std::vector<Sentence>& sentences, const Dictionary& dict, const RbaConfig& cfg) {
    if (cfg.normal_length_threshold < 1) throw ValidationError("normal_length_threshold must be >= 1");
    OrganLabelSet out;
    out.organ_system = dict.organ_system;
    bool untracked = false;
    bool normal_vote = false;
    for (const auto& s : sentences) {
        auto v = classify_sentence(s, dict, cfg);
        for (auto d : v.disease_votes) out.disease_flags[d] = true;
        untracked = untracked || v.abnormal_untracked;
        normal_vote = normal_vote || v.normal_vote;
        out.verdicts.push_back(std::move(v));
    }
    out.normal = !out.any_disease() && !untracked && normal_vote;
    out.uncertain = !out.any_disease() && !out.normal;
    return out;
}

bool filter_by_protocol(Protocol protocol, OrganSystem organ) {
    switch (organ) {
        case OrganSystem::LungsPleura:
            return protocol == Protocol::CAP || protocol == Protocol::C || protocol == Protocol::CA ||
                   protocol == Protocol::CP;
        case OrganSystem::LiverGallbladder:
        case OrganSystem::KidneysUreters:
            return protocol == Protocol::CAP || protocol == Protocol::AP || protocol == Protocol::A ||
                   protocol == Protocol::CA;
    }
    return false;
}

bool filter_by_protocol(const StructuredReport& report, OrganSystem organ) {
    return filter_by_protocol(report.protocol, organ);
}

std::map<OrganSystem, OrganLabelSet> label_report(const StructuredReport& report, const OrganDictionaries& dicts,
                                                  const RbaConfig& cfg, bool apply_protocol_filter) {
    const auto& findings = report.findings();
    if (findings.empty()) throw MissingFindings("empty findings in report " + report.report_id);
    const auto sentences = segment_sentences(findings);
    std::map<OrganSystem, OrganLabelSet> out;
    for (const auto& [organ, dict] : dicts) {
        if (apply_protocol_filter && !filter_by_protocol(report, organ)) continue;
        out.emplace(organ, label_findings(sentences, dict, cfg));
    }
    return out;
}

LabelRecord LabelRecord::from(const std::string& report_id, const OrganLabelSet& labels, const Dictionary& dict,
                              const std::vector<Sentence>* sentences) {
    LabelRecord r;
    r.report_id = report_id;
    r.organ = labels.organ_system;
    r.disease_flags = labels.disease_flags;
    r.normal = labels.normal;
    r.uncertain = labels.uncertain;
    if (sentences) {
        for (std::size_t i = 0; i < labels.verdicts.size() && i < sentences->size(); ++i) {
            for (const auto& h : labels.verdicts[i].evidence) {
                const auto& toks = (*sentences)[i].tokens;
                std::string phrase;
                for (std::size_t k = 0; k < h.matched_token_count; ++k)
                    phrase += (k ? " " : "") + toks[h.token_index + k];
                r.evidence.push_back(std::to_string(i) + ":" + phrase + "=" +
                                     std::string(to_string(dict.entries[h.entry].category)));
            }
        }
    }
    return r;
}

bool LabelRecord::same_flags(const LabelRecord& other) const {
    return report_id == other.report_id && organ == other.organ && disease_flags == other.disease_flags &&
           normal == other.normal && uncertain == other.uncertain;
}

void write_label_record(std::ostream& out, const LabelRecord& record, const Dictionary& dict) {
    nlohmann::ordered_json j;
    j["report_id"] = record.report_id;
    j["organ"] = organ_name(record.organ);
    for (std::size_t i = 0; i < kDiseaseCount; ++i) j[dict.disease_labels[i]] = record.disease_flags[i];
    j["normal"] = record.normal;
    j["uncertain"] = record.uncertain;
    if (!record.evidence.empty()) j["evidence"] = record.evidence;
    out << j.dump() << '\n';
}

std::vector<LabelRecord> read_label_records(std::istream& in, const OrganDictionaries& dicts) {
    std::vector<LabelRecord> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        try {
            const auto j = nlohmann::json::parse(line);
            LabelRecord r;
            r.report_id = j.at("report_id").get<std::string>();
            const auto organ = organ_from_name(j.at("organ").get<std::string>());
            if (!organ) throw ParseError(line_no, "unknown organ");
            r.organ = *organ;
            auto it = dicts.find(r.organ);
            if (it == dicts.end()) throw ParseError(line_no, "no dictionary for organ " + std::string(organ_name(r.organ)));
            for (std::size_t i = 0; i < kDiseaseCount; ++i) r.disease_flags[i] = j.at(it->second.disease_labels[i]).get<bool>();
            r.normal = j.at("normal").get<bool>();
            r.uncertain = j.at("uncertain").get<bool>();
            if (j.contains("evidence")) r.evidence = j["evidence"].get<std::vector<std::string>>();
            out.push_back(std::move(r));
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(line_no, e.what());
        }
    }
    return out;
}

}  // namespace radlabel
