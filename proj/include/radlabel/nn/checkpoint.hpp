#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>

#include "json.hpp"
#include "radlabel/nn/model.hpp"

namespace radlabel::nn {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
    Model model;
    nlohmann::ordered_json metadata;  // caller-defined, e.g. vocabulary and label names
};

/// Layout: 8-byte magic "RADLCKPT", u32 version, u64 length + JSON config
/// block, u32 tensor count, then per tensor a u32 name length, the name, u64
/// rows, u64 cols and rows*cols little-endian f64 values. Optimizer moments
/// are stored under "adam_m/" and "adam_v/" prefixes.
void save_checkpoint(std::ostream& out, const Model& model, const nlohmann::ordered_json& metadata = {});
void save_checkpoint(const std::string& path, const Model& model, const nlohmann::ordered_json& metadata = {});

/// Throws FormatError on a bad magic, version or truncated stream.
Checkpoint load_checkpoint(std::istream& in);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace radlabel::nn
