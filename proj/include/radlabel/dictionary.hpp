#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "radlabel/text.hpp"

namespace radlabel {

enum class OrganSystem { LungsPleura, LiverGallbladder, KidneysUreters };

inline constexpr std::array<OrganSystem, 3> kAllOrgans{
    OrganSystem::LungsPleura, OrganSystem::LiverGallbladder, OrganSystem::KidneysUreters};

/// Short CLI names: lungs, liver, kidneys.
std::string_view organ_name(OrganSystem organ);
std::optional<OrganSystem> organ_from_name(std::string_view name);

enum class Category { OrganAnatomy, SingleOrganDisease, MultiOrganDisease, Negation, Qualifier, Normal };
enum class MatchMode { WholeToken, Prefix };

std::string_view to_string(Category c);
std::string_view to_string(MatchMode m);

inline bool is_disease(Category c) {
    return c == Category::SingleOrganDisease || c == Category::MultiOrganDisease;
}

inline constexpr std::size_t kDiseaseCount = 4;

struct TermEntry {
    std::string surface;               // lowercase, space-separated for phrases
    std::vector<std::string> tokens;   // surface split on spaces
    Category category = Category::OrganAnatomy;
    MatchMode match_mode = MatchMode::WholeToken;
    std::optional<std::size_t> target_label;  // index into disease_labels
};

struct Dictionary {
    OrganSystem organ_system = OrganSystem::LungsPleura;
    std::array<std::string, kDiseaseCount> disease_labels;
    std::vector<TermEntry> entries;

    /// disease_labels followed by "normal".
    std::vector<std::string> output_labels() const;
    std::optional<std::size_t> label_index(std::string_view name) const;
};

/// Dictionary text format: one entry per line,
///   surface<TAB>category<TAB>match_mode<TAB>target_label_or_dash
/// with '#' comment lines. Two pragma comments carry the header:
///   #!organ<TAB>lungs
///   #!labels<TAB>atelectasis,nodule,emphysema,effusion
Dictionary parse_dictionary(std::istream& in);
Dictionary load_dictionary(const std::filesystem::path& path);

/// Canonical form: pragmas, then entries grouped by category in enum order
/// (each group under a "# <category>" comment), file order within a group.
void write_dictionary(std::ostream& out, const Dictionary& dict);
std::string serialize_dictionary(const Dictionary& dict);

/// Throws ValidationError when the dictionary breaks its invariants.
void validate(const Dictionary& dict);

struct TermHit {
    std::size_t entry = 0;  // index into Dictionary::entries
    std::size_t token_index = 0;
    std::size_t matched_token_count = 0;
    bool operator==(const TermHit&) const = default;
};

/// All (entry, position) matches ordered by token position then entry index.
/// Every phrase token but the last must match whole; the last matches by
/// prefix when the entry is a Prefix entry.
std::vector<TermHit> match_terms(const std::vector<std::string>& tokens, const Dictionary& dict);
std::vector<TermHit> match_terms(const Sentence& sentence, const Dictionary& dict);

/// Directory holding the three bundled dictionaries (set at build time).
std::filesystem::path bundled_dictionary_dir();
std::filesystem::path bundled_dictionary_path(OrganSystem organ);

}  // namespace radlabel
