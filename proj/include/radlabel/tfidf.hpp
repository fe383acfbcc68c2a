#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace radlabel {

struct TermScore {
    std::string token;
    std::size_t doc_id = 0;  // document holding the maximum score
    std::size_t tf = 0;      // raw count in that document
    double idf = 0.0;        // ln(N / df)
    double score = 0.0;      // tf * idf
};

/// Per-document raw-count tf times unsmoothed natural-log idf; each token is
/// ranked by its best document. Zero-score tokens are dropped. Ties are broken
/// alphabetically. Documents are tokenized with the sentence tokenizer.
std::vector<TermScore> tfidf_rank(const std::vector<std::string>& corpus, std::size_t k);

}  // namespace radlabel
