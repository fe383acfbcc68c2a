#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace radlabel {

enum class Protocol { CAP, C, AP, A, P, CA, CP, OTHER };
enum class Section { Protocol, Indication, Technique, Findings, Impression };

std::string_view to_string(Protocol p);
std::string_view to_string(Section s);
std::optional<Protocol> protocol_from_string(std::string_view s);

/// Classifies a protocol description by the presence of the words chest,
/// abdomen and pelvis (case-insensitive).
Protocol classify_protocol(std::string_view protocol_text);

struct StructuredReport {
    std::string report_id;
    std::string subject_id;
    Protocol protocol = Protocol::OTHER;
    std::map<Section, std::string> sections;

    const std::string& findings() const;
    bool operator==(const StructuredReport&) const = default;
};

/// One line of the report input file.
struct ReportRecord {
    std::string report_id;
    std::string subject_id;
    std::string raw_text;
};

/// Splits a raw report into its named sections. A header is one of the five
/// section names followed by a colon, matched case-insensitively at a word
/// boundary. Text before the first header is discarded.
StructuredReport parse_report(std::string_view raw, std::string report_id = "report",
                              std::string subject_id = {});
StructuredReport parse_report(const ReportRecord& record);

struct Span {
    std::size_t begin = 0;
    std::size_t end = 0;
    bool operator==(const Span&) const = default;
};

struct Sentence {
    std::size_t index = 0;
    std::vector<std::string> tokens;
    Span raw_span;
};

/// Lowercased runs of ASCII letters joined by internal hyphens.
std::vector<std::string> rba_tokenize(std::string_view text);

/// Splits on '.', '?' or '!' followed by whitespace or end of text. Sentences
/// without any token are dropped and the remaining ones renumbered.
std::vector<Sentence> segment_sentences(std::string_view findings);

/// Numbers and punctuation removed, lowercased, whitespace-split. Removed
/// characters are deleted rather than replaced, so "non-obstructing" becomes
/// one token.
std::vector<std::string> rnn_tokenize(std::string_view text);

class Vocabulary {
public:
    static constexpr std::int32_t kPad = 0;
    static constexpr std::int32_t kUnknown = 1;

    Vocabulary();
    /// Builds from an id-ordered token list; index 0 and 1 must be the
    /// reserved pad and unknown markers.
    explicit Vocabulary(std::vector<std::string> id_to_token);

    std::int32_t id(std::string_view token) const;
    const std::string& token(std::int32_t id) const { return id_to_token_.at(static_cast<std::size_t>(id)); }
    std::size_t size() const { return id_to_token_.size(); }
    const std::vector<std::string>& tokens() const { return id_to_token_; }
    /// FNV-1a over the id-ordered token list.
    std::uint64_t fingerprint() const { return fingerprint_; }

    void save(std::ostream& out) const;
    static Vocabulary load(std::istream& in);

    bool operator==(const Vocabulary& other) const { return id_to_token_ == other.id_to_token_; }

private:
    std::vector<std::string> id_to_token_;
    std::unordered_map<std::string, std::int32_t> token_to_id_;
    std::uint64_t fingerprint_ = 0;
};

inline constexpr std::string_view kPadToken = "<pad>";
inline constexpr std::string_view kUnknownToken = "<unk>";

/// Tokens with frequency >= min_count ordered by (frequency desc, token asc).
Vocabulary build_vocabulary(const std::vector<std::string>& corpus, std::size_t min_count = 1);

struct EncodedFindings {
    std::vector<std::int32_t> token_ids;
    std::size_t true_length = 0;
    std::uint64_t vocab_ref = 0;
};

EncodedFindings rnn_preprocess(std::string_view findings, const Vocabulary& vocab,
                               std::size_t max_len = 650);

std::vector<ReportRecord> read_report_records(std::istream& in);
void write_report_record(std::ostream& out, const ReportRecord& record);

}  // namespace radlabel
