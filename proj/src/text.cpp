#include "radlabel/text.hpp"

#include <algorithm>
#include <cctype>
#include <istream>
#include <ostream>
#include <sstream>

#include "json.hpp"

#include "radlabel/error.hpp"

namespace radlabel {

namespace {

bool is_alpha(char c) { return std::isalpha(static_cast<unsigned char>(c)) != 0; }
bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }
char lower(char c) { return static_cast<char>(std::tolower(static_cast<unsigned char>(c))); }

std::string to_lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), lower);
    return out;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
    while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
    return s;
}

constexpr std::array<std::pair<Section, std::string_view>, 5> kSectionNames{{
    {Section::Protocol, "protocol"},
    {Section::Indication, "indication"},
    {Section::Technique, "technique"},
    {Section::Findings, "findings"},
    {Section::Impression, "impression"},
}};

struct HeaderMatch {
    Section section;
    std::size_t begin;  // first char of the name
    std::size_t end;    // one past the colon
};

std::vector<HeaderMatch> find_headers(std::string_view raw) {
    std::vector<HeaderMatch> out;
    const std::string low = to_lower(raw);
    for (std::size_t i = 0; i < low.size(); ++i) {
        if (i > 0 && !is_space(low[i - 1]) && std::ispunct(static_cast<unsigned char>(low[i - 1])) == 0)
            continue;
        for (const auto& [section, name] : kSectionNames) {
            if (low.compare(i, name.size(), name) != 0) continue;
            std::size_t j = i + name.size();
            while (j < low.size() && (low[j] == ' ' || low[j] == '\t')) ++j;
            if (j < low.size() && low[j] == ':') {
                out.push_back({section, i, j + 1});
                i = j;
                break;
            }
        }
    }
    return out;
}

constexpr std::uint64_t kFnvOffset = 1469598103934665603ULL;
constexpr std::uint64_t kFnvPrime = 1099511628211ULL;

}  // namespace

std::string_view to_string(Protocol p) {
    switch (p) {
        case Protocol::CAP: return "CAP";
        case Protocol::C: return "C";
        case Protocol::AP: return "AP";
        case Protocol::A: return "A";
        case Protocol::P: return "P";
        case Protocol::CA: return "CA";
        case Protocol::CP: return "CP";
        case Protocol::OTHER: return "OTHER";
    }
    return "OTHER";
}

std::string_view to_string(Section s) {
    for (const auto& [section, name] : kSectionNames)
        if (section == s) return name;
    return "";
}

std::optional<Protocol> protocol_from_string(std::string_view s) {
    for (Protocol p : {Protocol::CAP, Protocol::C, Protocol::AP, Protocol::A, Protocol::P,
                       Protocol::CA, Protocol::CP, Protocol::OTHER})
        if (to_string(p) == s) return p;
    return std::nullopt;
}

Protocol classify_protocol(std::string_view protocol_text) {
    const std::string low = to_lower(protocol_text);
    const bool chest = low.find("chest") != std::string::npos;
    const bool abdomen = low.find("abdomen") != std::string::npos;
    const bool pelvis = low.find("pelvis") != std::string::npos;
    if (chest && abdomen && pelvis) return Protocol::CAP;
    if (chest && abdomen) return Protocol::CA;
    if (chest && pelvis) return Protocol::CP;
    if (chest) return Protocol::C;
    if (abdomen && pelvis) return Protocol::AP;
    if (abdomen) return Protocol::A;
    if (pelvis) return Protocol::P;
    return Protocol::OTHER;
}

const std::string& StructuredReport::findings() const {
    static const std::string empty;
    auto it = sections.find(Section::Findings);
    return it == sections.end() ? empty : it->second;
}

StructuredReport parse_report(std::string_view raw, std::string report_id, std::string subject_id) {
    if (trim(raw).empty()) throw EmptyInput("report text is blank");
    if (report_id.empty()) throw ValidationError("report_id must be nonempty");

    StructuredReport report;
    report.report_id = std::move(report_id);
    report.subject_id = subject_id.empty() ? report.report_id : std::move(subject_id);

    const auto headers = find_headers(raw);
    for (std::size_t h = 0; h < headers.size(); ++h) {
        const std::size_t stop = h + 1 < headers.size() ? headers[h + 1].begin : raw.size();
        const std::string_view body = trim(raw.substr(headers[h].end, stop - headers[h].end));
        std::string& dst = report.sections[headers[h].section];
        if (!dst.empty() && !body.empty()) dst += ' ';
        dst += body;
    }
    auto findings = report.sections.find(Section::Findings);
    if (findings == report.sections.end())
        throw MissingFindings("no findings header in report " + report.report_id);
    if (auto it = report.sections.find(Section::Protocol); it != report.sections.end())
        report.protocol = classify_protocol(it->second);
    return report;
}

StructuredReport parse_report(const ReportRecord& record) {
    return parse_report(record.raw_text, record.report_id, record.subject_id);
}

std::vector<std::string> rba_tokenize(std::string_view text) {
    std::vector<std::string> tokens;
    std::size_t i = 0;
    while (i < text.size()) {
        if (!is_alpha(text[i])) {
            ++i;
            continue;
        }
        std::string token;
        while (i < text.size()) {
            if (is_alpha(text[i])) {
                token += lower(text[i++]);
            } else if (text[i] == '-' && i + 1 < text.size() && is_alpha(text[i + 1])) {
                token += '-';
                ++i;
            } else {
                break;
            }
        }
        tokens.push_back(std::move(token));
    }
    return tokens;
}

std::vector<Sentence> segment_sentences(std::string_view findings) {
    std::vector<Sentence> out;
    std::size_t start = 0;
    auto emit = [&](std::size_t end) {
        auto tokens = rba_tokenize(findings.substr(start, end - start));
        if (!tokens.empty()) {
            std::size_t b = start;
            std::size_t e = end;
            while (b < e && is_space(findings[b])) ++b;
            while (e > b && is_space(findings[e - 1])) --e;
            out.push_back({out.size(), std::move(tokens), {b, e}});
        }
        start = end;
    };
    for (std::size_t i = 0; i < findings.size(); ++i) {
        const char c = findings[i];
        if (c != '.' && c != '?' && c != '!') continue;
        if (i + 1 == findings.size() || is_space(findings[i + 1])) emit(i + 1);
    }
    if (start < findings.size()) emit(findings.size());
    return out;
}

std::vector<std::string> rnn_tokenize(std::string_view text) {
    std::vector<std::string> tokens;
    std::string current;
    for (char c : text) {
        if (is_alpha(c)) {
            current += lower(c);
        } else if (is_space(c)) {
            if (!current.empty()) tokens.push_back(std::move(current));
            current.clear();
        }
        // digits, punctuation and non-ASCII bytes are deleted
    }
    if (!current.empty()) tokens.push_back(std::move(current));
    return tokens;
}

Vocabulary::Vocabulary() : Vocabulary(std::vector<std::string>{std::string(kPadToken), std::string(kUnknownToken)}) {}

Vocabulary::Vocabulary(std::vector<std::string> id_to_token) : id_to_token_(std::move(id_to_token)) {
    if (id_to_token_.size() < 2 || id_to_token_[0] != kPadToken || id_to_token_[1] != kUnknownToken)
        throw ValidationError("vocabulary must start with <pad> and <unk>");
    fingerprint_ = kFnvOffset;
    for (std::size_t i = 0; i < id_to_token_.size(); ++i) {
        const auto& tok = id_to_token_[i];
        if (i >= 2) {
            if (tok.empty()) throw ValidationError("empty vocabulary token at id " + std::to_string(i));
            if (!token_to_id_.emplace(tok, static_cast<std::int32_t>(i)).second)
                throw ValidationError("duplicate vocabulary token '" + tok + "'");
        }
        for (unsigned char c : tok) {
            fingerprint_ ^= c;
            fingerprint_ *= kFnvPrime;
        }
        fingerprint_ ^= 0xffu;
        fingerprint_ *= kFnvPrime;
    }
}

std::int32_t Vocabulary::id(std::string_view token) const {
    auto it = token_to_id_.find(std::string(token));
    return it == token_to_id_.end() ? kUnknown : it->second;
}

void Vocabulary::save(std::ostream& out) const {
    out << "vocab " << id_to_token_.size() << '\n';
    for (std::size_t i = 0; i < id_to_token_.size(); ++i) out << id_to_token_[i] << '\t' << i << '\n';
}

Vocabulary Vocabulary::load(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw FormatError(1, "missing vocab header");
    std::istringstream header(line);
    std::string magic;
    std::size_t size = 0;
    if (!(header >> magic >> size) || magic != "vocab") throw FormatError(1, "expected 'vocab <size>'");
    std::vector<std::string> tokens(size);
    std::vector<bool> seen(size, false);
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto tab = line.find('\t');
        if (tab == std::string::npos) throw FormatError(line_no, "expected token<TAB>id");
        std::size_t id = 0;
        try {
            id = std::stoul(line.substr(tab + 1));
        } catch (const std::exception&) {
            throw FormatError(line_no, "bad id");
        }
        if (id >= size || seen[id]) throw FormatError(line_no, "id out of range or repeated");
        tokens[id] = line.substr(0, tab);
        seen[id] = true;
    }
    if (std::find(seen.begin(), seen.end(), false) != seen.end())
        throw FormatError(line_no, "vocabulary has missing ids");
    return Vocabulary(std::move(tokens));
}

Vocabulary build_vocabulary(const std::vector<std::string>& corpus, std::size_t min_count) {
    std::unordered_map<std::string, std::size_t> counts;
    for (const auto& doc : corpus)
        for (auto& tok : rnn_tokenize(doc)) ++counts[std::move(tok)];
    std::vector<std::pair<std::string, std::size_t>> ranked;
    for (auto& [tok, n] : counts)
        if (n >= std::max<std::size_t>(min_count, 1) && tok != kPadToken && tok != kUnknownToken)
            ranked.emplace_back(tok, n);
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
        return a.second != b.second ? a.second > b.second : a.first < b.first;
    });
    std::vector<std::string> ids{std::string(kPadToken), std::string(kUnknownToken)};
    for (auto& [tok, n] : ranked) ids.push_back(std::move(tok));
    return Vocabulary(std::move(ids));
}

EncodedFindings rnn_preprocess(std::string_view findings, const Vocabulary& vocab, std::size_t max_len) {
    if (max_len == 0) throw ValidationError("max_len must be >= 1");
    EncodedFindings enc;
    enc.token_ids.assign(max_len, Vocabulary::kPad);
    enc.vocab_ref = vocab.fingerprint();
    const auto tokens = rnn_tokenize(findings);
    enc.true_length = std::min(tokens.size(), max_len);
    for (std::size_t i = 0; i < enc.true_length; ++i) enc.token_ids[i] = vocab.id(tokens[i]);
    return enc;
}

std::vector<ReportRecord> read_report_records(std::istream& in) {
    std::vector<ReportRecord> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        try {
            const auto j = nlohmann::json::parse(line);
            ReportRecord r;
            r.report_id = j.at("report_id").get<std::string>();
            r.subject_id = j.value("subject_id", r.report_id);
            r.raw_text = j.at("raw_text").get<std::string>();
            out.push_back(std::move(r));
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(line_no, e.what());
        }
    }
    return out;
}

void write_report_record(std::ostream& out, const ReportRecord& record) {
    nlohmann::ordered_json j;
    j["report_id"] = record.report_id;
    j["subject_id"] = record.subject_id;
    j["raw_text"] = record.raw_text;
    out << j.dump() << '\n';
}

}  // namespace radlabel
