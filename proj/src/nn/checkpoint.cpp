#include "radlabel/nn/checkpoint.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <map>

#include "radlabel/error.hpp"

namespace radlabel::nn {

namespace {

constexpr std::array<char, 8> kMagic{'R', 'A', 'D', 'L', 'C', 'K', 'P', 'T'};

void put_u64(std::ostream& out, std::uint64_t v) {
    char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    out.write(b, 8);
}

void put_u32(std::ostream& out, std::uint32_t v) {
    char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    out.write(b, 4);
}

std::uint64_t get_u64(std::istream& in) {
    unsigned char b[8];
    if (!in.read(reinterpret_cast<char*>(b), 8)) throw FormatError(0, "truncated checkpoint");
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | b[i];
    return v;
}

std::uint32_t get_u32(std::istream& in) {
    unsigned char b[4];
    if (!in.read(reinterpret_cast<char*>(b), 4)) throw FormatError(0, "truncated checkpoint");
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | b[i];
    return v;
}

std::string get_bytes(std::istream& in, std::uint64_t n) {
    if (n > (1ULL << 32)) throw FormatError(0, "implausible block length");
    std::string s(n, '\0');
    if (n && !in.read(s.data(), static_cast<std::streamsize>(n))) throw FormatError(0, "truncated checkpoint");
    return s;
}

void put_tensor(std::ostream& out, const std::string& name, const Matrix& m) {
    put_u32(out, static_cast<std::uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    put_u64(out, static_cast<std::uint64_t>(m.rows()));
    put_u64(out, static_cast<std::uint64_t>(m.cols()));
    for (Eigen::Index i = 0; i < m.size(); ++i) put_u64(out, std::bit_cast<std::uint64_t>(m.data()[i]));
}

nlohmann::ordered_json config_json(const ModelConfig& c) {
    return {{"vocab_size", c.vocab_size}, {"embed_dim", c.embed_dim},       {"recurrent_units", c.recurrent_units},
            {"dense_units", c.dense_units}, {"dropout_rate", c.dropout_rate}, {"max_len", c.max_len},
            {"num_labels", c.num_labels}, {"seed", c.seed}};
}

}  // namespace

void save_checkpoint(std::ostream& out, const Model& model, const nlohmann::ordered_json& metadata) {
    nlohmann::ordered_json block;
    block["model"] = config_json(model.config);
    block["state"] = {{"step", model.state.step},
                      {"epoch", model.state.epoch},
                      {"best_val_loss_bits", std::bit_cast<std::uint64_t>(model.state.best_val_loss)},
                      {"has_moments", model.state.has_moments}};
    block["metadata"] = metadata.is_null() ? nlohmann::ordered_json::object() : metadata;
    const std::string text = block.dump();

    out.write(kMagic.data(), kMagic.size());
    put_u32(out, kCheckpointVersion);
    put_u64(out, text.size());
    out.write(text.data(), static_cast<std::streamsize>(text.size()));

    std::uint32_t count = 13;
    if (model.state.has_moments) count *= 3;
    put_u32(out, count);
    model.params.for_each([&](std::string_view name, const Matrix& m) { put_tensor(out, std::string(name), m); });
    if (model.state.has_moments) {
        model.state.adam_m.for_each(
            [&](std::string_view name, const Matrix& m) { put_tensor(out, "adam_m/" + std::string(name), m); });
        model.state.adam_v.for_each(
            [&](std::string_view name, const Matrix& m) { put_tensor(out, "adam_v/" + std::string(name), m); });
    }
    if (!out) throw FormatError(0, "failed to write checkpoint");
}

void save_checkpoint(const std::string& path, const Model& model, const nlohmann::ordered_json& metadata) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot open " + path + " for writing");
    save_checkpoint(out, model, metadata);
}

Checkpoint load_checkpoint(std::istream& in) {
    std::array<char, 8> magic{};
    if (!in.read(magic.data(), magic.size()) || magic != kMagic) throw FormatError(0, "not a checkpoint (bad magic)");
    const auto version = get_u32(in);
    if (version != kCheckpointVersion) throw FormatError(0, "unsupported checkpoint version " + std::to_string(version));

    nlohmann::ordered_json block;
    try {
        block = nlohmann::ordered_json::parse(get_bytes(in, get_u64(in)));
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(0, std::string("bad config block: ") + e.what());
    }

    Checkpoint ck;
    auto& cfg = ck.model.config;
    try {
        const auto& m = block.at("model");
        cfg.vocab_size = m.at("vocab_size").get<std::size_t>();
        cfg.embed_dim = m.at("embed_dim").get<std::size_t>();
        cfg.recurrent_units = m.at("recurrent_units").get<std::size_t>();
        cfg.dense_units = m.at("dense_units").get<std::size_t>();
        cfg.dropout_rate = m.at("dropout_rate").get<double>();
        cfg.max_len = m.at("max_len").get<std::size_t>();
        cfg.num_labels = m.at("num_labels").get<std::size_t>();
        cfg.seed = m.at("seed").get<std::uint64_t>();
        const auto& s = block.at("state");
        ck.model.state.step = s.at("step").get<std::uint64_t>();
        ck.model.state.epoch = s.at("epoch").get<int>();
        ck.model.state.best_val_loss = std::bit_cast<double>(s.at("best_val_loss_bits").get<std::uint64_t>());
        ck.model.state.has_moments = s.at("has_moments").get<bool>();
        ck.metadata = block.value("metadata", nlohmann::ordered_json::object());
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(0, std::string("bad config block: ") + e.what());
    }
    cfg.validate();

    std::map<std::string, Matrix> tensors;
    const auto count = get_u32(in);
    for (std::uint32_t i = 0; i < count; ++i) {
        std::string name = get_bytes(in, get_u32(in));
        const auto rows = get_u64(in);
        const auto cols = get_u64(in);
        if (rows * cols > (1ULL << 31)) throw FormatError(0, "implausible tensor size for " + name);
        Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
        for (Eigen::Index j = 0; j < m.size(); ++j) m.data()[j] = std::bit_cast<double>(get_u64(in));
        tensors.emplace(std::move(name), std::move(m));
    }

    // shapes come from a fresh init so the stored tensors can be checked
    const Model shape = init_model(cfg);
    auto take = [&](const std::string& name, const Matrix& expected, Matrix& dst) {
        auto it = tensors.find(name);
        if (it == tensors.end()) throw FormatError(0, "missing tensor " + name);
        if (it->second.rows() != expected.rows() || it->second.cols() != expected.cols())
            throw FormatError(0, "tensor " + name + " has the wrong shape");
        dst = std::move(it->second);
    };
    std::vector<const Matrix*> ref;
    shape.params.for_each([&](std::string_view, const Matrix& m) { ref.push_back(&m); });
    auto fill = [&](Parameters& target, const std::string& prefix) {
        target = shape.params;
        std::size_t i = 0;
        target.for_each([&](std::string_view name, Matrix& m) { take(prefix + std::string(name), *ref[i++], m); });
    };
    fill(ck.model.params, "");
    if (ck.model.state.has_moments) {
        fill(ck.model.state.adam_m, "adam_m/");
        fill(ck.model.state.adam_v, "adam_v/");
    }
    return ck;
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open checkpoint " + path);
    return load_checkpoint(in);
}

}  // namespace radlabel::nn
