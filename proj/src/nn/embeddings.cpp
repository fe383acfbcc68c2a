#include "radlabel/nn/embeddings.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "radlabel/error.hpp"

namespace radlabel::nn {

namespace {

bool parse_size(const std::string& s, std::size_t& out) {
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc() && ptr == s.data() + s.size();
}

}  // namespace

AlignedEmbeddings load_embeddings(std::istream& in, const Vocabulary& vocab, std::size_t expected_dim) {
    std::string line;
    if (!std::getline(in, line)) throw FormatError(1, "missing header");
    std::istringstream header(line);
    std::string count_s, dim_s, extra;
    std::size_t count = 0, dim = 0;
    if (!(header >> count_s >> dim_s) || (header >> extra) || !parse_size(count_s, count) || !parse_size(dim_s, dim) ||
        dim == 0)
        throw FormatError(1, "header must be \"<count> <dim>\"");
    if (expected_dim != 0 && dim != expected_dim)
        throw DimMismatch("embedding width " + std::to_string(dim) + " != embed_dim " + std::to_string(expected_dim));

    AlignedEmbeddings out;
    out.values = Matrix::Zero(static_cast<Eigen::Index>(vocab.size()), static_cast<Eigen::Index>(dim));
    out.found.assign(vocab.size(), false);

    std::size_t rows = 0;
    std::size_t line_no = 1;
    std::vector<double> vec(dim);
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        std::istringstream row(line);
        std::string token, field;
        row >> token;
        std::size_t n = 0;
        while (row >> field) {
            if (n == dim) throw FormatError(line_no, "more than " + std::to_string(dim) + " values");
            try {
                std::size_t used = 0;
                vec[n] = std::stod(field, &used);
                if (used != field.size()) throw std::invalid_argument(field);
            } catch (const std::exception&) {
                throw FormatError(line_no, "not a number: " + field);
            }
            ++n;
        }
        if (n != dim) throw FormatError(line_no, "expected " + std::to_string(dim) + " values, got " + std::to_string(n));
        ++rows;
        const auto id = vocab.id(token);
        if (id == Vocabulary::kUnknown && token != kUnknownToken) continue;
        out.found[static_cast<std::size_t>(id)] = true;
        for (std::size_t j = 0; j < dim; ++j) out.values(id, static_cast<Eigen::Index>(j)) = vec[j];
    }
    if (rows != count)
        throw FormatError(line_no, "header declares " + std::to_string(count) + " rows, found " + std::to_string(rows));

    for (std::size_t i = 2; i < vocab.size(); ++i) (out.found[i] ? out.hits : out.misses)++;
    return out;
}

AlignedEmbeddings load_embeddings(const std::string& path, const Vocabulary& vocab, std::size_t expected_dim) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open embedding file " + path);
    return load_embeddings(in, vocab, expected_dim);
}

}  // namespace radlabel::nn
