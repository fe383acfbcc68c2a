#include "radlabel/tfidf.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <unordered_map>

#include "radlabel/error.hpp"
#include "radlabel/text.hpp"

namespace radlabel {

std::vector<TermScore> tfidf_rank(const std::vector<std::string>& corpus, std::size_t k) {
    if (corpus.empty()) throw EmptyInput("tf-idf corpus is empty");
    if (k == 0) throw ValidationError("k must be >= 1");

    std::vector<std::unordered_map<std::string, std::size_t>> tf(corpus.size());
    std::map<std::string, std::size_t> df;
    for (std::size_t d = 0; d < corpus.size(); ++d) {
        for (const auto& s : segment_sentences(corpus[d]))
            for (const auto& t : s.tokens) ++tf[d][t];
        for (const auto& [t, n] : tf[d]) ++df[t];
    }

    const double n_docs = static_cast<double>(corpus.size());
    std::vector<TermScore> best;
    best.reserve(df.size());
    for (const auto& [token, doc_freq] : df) {
        TermScore s;
        s.token = token;
        s.idf = std::log(n_docs / static_cast<double>(doc_freq));
        for (std::size_t d = 0; d < corpus.size(); ++d) {
            auto it = tf[d].find(token);
            if (it == tf[d].end()) continue;
            const double score = static_cast<double>(it->second) * s.idf;
            if (score > s.score || s.tf == 0) {
                s.score = score;
                s.tf = it->second;
                s.doc_id = d;
            }
        }
        if (s.score > 0.0) best.push_back(std::move(s));
    }
    std::sort(best.begin(), best.end(), [](const TermScore& a, const TermScore& b) {
        return a.score != b.score ? a.score > b.score : a.token < b.token;
    });
    if (best.size() > k) best.resize(k);
    return best;
}

}  // namespace radlabel
