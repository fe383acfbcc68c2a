#include "radlabel/dictionary.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "radlabel/error.hpp"

#ifndef RADLABEL_DATA_DIR
#define RADLABEL_DATA_DIR "data"
#endif

namespace radlabel {

namespace {

constexpr std::array<std::pair<Category, std::string_view>, 6> kCategoryNames{{
    {Category::OrganAnatomy, "organ_anatomy"},
    {Category::SingleOrganDisease, "single_organ_disease"},
    {Category::MultiOrganDisease, "multi_organ_disease"},
    {Category::Negation, "negation"},
    {Category::Qualifier, "qualifier"},
    {Category::Normal, "normal"},
}};

std::vector<std::string> split(std::string_view s, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = s.find(sep, start);
        out.emplace_back(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

bool valid_token(std::string_view t) {
    if (t.empty()) return false;
    return std::all_of(t.begin(), t.end(), [](char c) { return (c >= 'a' && c <= 'z') || c == '-'; });
}

bool token_matches(std::string_view token, std::string_view term, bool prefix) {
    return prefix ? token.starts_with(term) : token == term;
}

}  // namespace

std::string_view organ_name(OrganSystem organ) {
    switch (organ) {
        case OrganSystem::LungsPleura: return "lungs";
        case OrganSystem::LiverGallbladder: return "liver";
        case OrganSystem::KidneysUreters: return "kidneys";
    }
    return "";
}

std::optional<OrganSystem> organ_from_name(std::string_view name) {
    for (auto organ : kAllOrgans)
        if (organ_name(organ) == name) return organ;
    return std::nullopt;
}

std::string_view to_string(Category c) {
    for (const auto& [cat, name] : kCategoryNames)
        if (cat == c) return name;
    return "";
}

std::string_view to_string(MatchMode m) { return m == MatchMode::Prefix ? "prefix" : "whole"; }

std::vector<std::string> Dictionary::output_labels() const {
    std::vector<std::string> out(disease_labels.begin(), disease_labels.end());
    out.emplace_back("normal");
    return out;
}

std::optional<std::size_t> Dictionary::label_index(std::string_view name) const {
    for (std::size_t i = 0; i < disease_labels.size(); ++i)
        if (disease_labels[i] == name) return i;
    return std::nullopt;
}

void validate(const Dictionary& dict) {
    std::set<std::string> labels;
    for (const auto& l : dict.disease_labels) {
        if (l.empty() || l == "normal") throw ValidationError("disease labels must be 4 distinct names other than 'normal'");
        labels.insert(l);
    }
    if (labels.size() != kDiseaseCount) throw ValidationError("disease labels must be distinct");

    std::array<bool, kDiseaseCount> reachable{};
    std::set<std::pair<std::string, Category>> seen;
    for (const auto& e : dict.entries) {
        if (e.surface.empty() || e.tokens.empty()) throw ValidationError("empty term surface");
        for (const auto& t : e.tokens)
            if (!valid_token(t)) throw ValidationError("term '" + e.surface + "' is not lowercase alphabetic");
        if ((e.category == Category::Negation || e.category == Category::Qualifier) &&
            e.match_mode != MatchMode::WholeToken)
            throw ValidationError("negation/qualifier term '" + e.surface + "' must be whole-token");
        if (e.target_label) {
            if (!is_disease(e.category)) throw ValidationError("non-disease term '" + e.surface + "' has a target label");
            if (*e.target_label >= kDiseaseCount) throw ValidationError("target label out of range");
            reachable[*e.target_label] = true;
        }
        if (!seen.emplace(e.surface, e.category).second)
            throw ValidationError("duplicate entry '" + e.surface + "' in " + std::string(to_string(e.category)));
    }
    for (std::size_t i = 0; i < kDiseaseCount; ++i)
        if (!reachable[i]) throw ValidationError("disease label '" + dict.disease_labels[i] + "' has no term");
}

Dictionary parse_dictionary(std::istream& in) {
    Dictionary dict;
    bool have_organ = false;
    bool have_labels = false;
    std::vector<std::pair<std::size_t, std::string>> pending_targets;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line.starts_with("#!")) {
            const auto fields = split(std::string_view(line).substr(2), '\t');
            if (fields.size() != 2) throw ParseError(line_no, "pragma must be '#!key<TAB>value'");
            if (fields[0] == "organ") {
                auto organ = organ_from_name(fields[1]);
                if (!organ) throw ParseError(line_no, "unknown organ '" + fields[1] + "'");
                dict.organ_system = *organ;
                have_organ = true;
            } else if (fields[0] == "labels") {
                const auto names = split(fields[1], ',');
                if (names.size() != kDiseaseCount) throw ParseError(line_no, "expected 4 comma-separated disease labels");
                std::copy(names.begin(), names.end(), dict.disease_labels.begin());
                have_labels = true;
            } else {
                throw ParseError(line_no, "unknown pragma '" + fields[0] + "'");
            }
            continue;
        }
        if (line.front() == '#') continue;

        const auto fields = split(line, '\t');
        if (fields.size() != 4)
            throw ParseError(line_no, "expected 4 tab-separated fields (surface, category, match_mode, target), got " +
                                          std::to_string(fields.size()));
        TermEntry e;
        e.surface = fields[0];
        e.tokens = split(e.surface, ' ');
        auto cat = std::find_if(kCategoryNames.begin(), kCategoryNames.end(),
                                [&](const auto& p) { return p.second == fields[1]; });
        if (fields[1].empty()) throw ParseError(line_no, "missing category");
        if (cat == kCategoryNames.end()) throw ParseError(line_no, "unknown category '" + fields[1] + "'");
        e.category = cat->first;
        if (fields[2] == "whole") e.match_mode = MatchMode::WholeToken;
        else if (fields[2] == "prefix") e.match_mode = MatchMode::Prefix;
        else throw ParseError(line_no, "match mode must be 'whole' or 'prefix'");
        if (fields[3].empty()) throw ParseError(line_no, "missing target label (use '-')");
        if (fields[3] != "-") pending_targets.emplace_back(dict.entries.size(), fields[3]);
        dict.entries.push_back(std::move(e));
    }
    if (!have_organ) throw ValidationError("missing '#!organ' pragma");
    if (!have_labels) throw ValidationError("missing '#!labels' pragma");
    for (const auto& [idx, name] : pending_targets) {
        auto label = dict.label_index(name);
        if (!label) throw ValidationError("term '" + dict.entries[idx].surface + "' targets unknown label '" + name + "'");
        dict.entries[idx].target_label = label;
    }
    validate(dict);
    return dict;
}

Dictionary load_dictionary(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open dictionary " + path.string());
    return parse_dictionary(in);
}

void write_dictionary(std::ostream& out, const Dictionary& dict) {
    out << "#!organ\t" << organ_name(dict.organ_system) << '\n';
    out << "#!labels\t";
    for (std::size_t i = 0; i < kDiseaseCount; ++i) out << (i ? "," : "") << dict.disease_labels[i];
    out << '\n';
    for (const auto& [cat, name] : kCategoryNames) {
        out << "# " << name << '\n';
        for (const auto& e : dict.entries) {
            if (e.category != cat) continue;
            out << e.surface << '\t' << name << '\t' << to_string(e.match_mode) << '\t'
                << (e.target_label ? dict.disease_labels[*e.target_label] : "-") << '\n';
        }
    }
}

std::string serialize_dictionary(const Dictionary& dict) {
    std::ostringstream out;
    write_dictionary(out, dict);
    return out.str();
}

std::vector<TermHit> match_terms(const std::vector<std::string>& tokens, const Dictionary& dict) {
    std::vector<TermHit> hits;
    for (std::size_t pos = 0; pos < tokens.size(); ++pos) {
        for (std::size_t ei = 0; ei < dict.entries.size(); ++ei) {
            const auto& e = dict.entries[ei];
            const std::size_t n = e.tokens.size();
            if (pos + n > tokens.size()) continue;
            bool ok = true;
            for (std::size_t k = 0; k < n && ok; ++k) {
                const bool prefix = e.match_mode == MatchMode::Prefix && k + 1 == n;
                ok = token_matches(tokens[pos + k], e.tokens[k], prefix);
            }
            if (ok) hits.push_back({ei, pos, n});
        }
    }
    return hits;
}

std::vector<TermHit> match_terms(const Sentence& sentence, const Dictionary& dict) {
    return match_terms(sentence.tokens, dict);
}

std::filesystem::path bundled_dictionary_dir() {
    if (const char* env = std::getenv("RADLABEL_DATA_DIR")) return std::filesystem::path(env) / "dictionaries";
    return std::filesystem::path(RADLABEL_DATA_DIR) / "dictionaries";
}

std::filesystem::path bundled_dictionary_path(OrganSystem organ) {
    return bundled_dictionary_dir() / (std::string(organ_name(organ)) + ".dict");
}

}  // namespace radlabel
