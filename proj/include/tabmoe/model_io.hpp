#pragma once

#include <cstdint>
#include <filesystem>

#include "tabmoe/model.hpp"

namespace tabmoe {

/// Checkpoint layout: 8-byte magic "TABMOE01", little-endian u64 header
/// length, canonical JSON header (config, seed, input width M', PLE widths,
/// parameter count), then every parameter tensor as little-endian f64 in
/// canonical order.
void save_checkpoint(const std::filesystem::path& path, const ModelParams& params,
                     std::uint64_t seed);

struct Checkpoint {
    ModelParams params;
    std::uint64_t seed = 0;
};

Checkpoint load_checkpoint(const std::filesystem::path& path);

} // namespace tabmoe
