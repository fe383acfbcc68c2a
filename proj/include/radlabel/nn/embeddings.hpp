#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>

#include "radlabel/nn/model.hpp"
#include "radlabel/text.hpp"

namespace radlabel::nn {

/// Reads the text embedding format: a "<count> <dim>" header, then one token
/// and <dim> floats per line. Vectors are aligned to vocabulary ids; file
/// tokens outside the vocabulary are ignored. `expected_dim` of 0 accepts any
/// width, otherwise a different width raises DimMismatch.
AlignedEmbeddings load_embeddings(std::istream& in, const Vocabulary& vocab, std::size_t expected_dim = 0);
AlignedEmbeddings load_embeddings(const std::string& path, const Vocabulary& vocab, std::size_t expected_dim = 0);

}  // namespace radlabel::nn
