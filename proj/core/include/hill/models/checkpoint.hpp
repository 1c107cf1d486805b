#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "hill/diffcore/optimizer.hpp"
#include "hill/models/backbone.hpp"
#include "hill/projection/projector.hpp"

namespace hill::models {

// File layout: "HILLCKPT", u32 version (1), u32 header length, UTF-8 JSON
// header, then the little-endian f32 payload the header indexes into.
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
    Backbone<float> backbone;
    projection::Projector<float> projector;
    ad::Optimizer<float> optimizer;
};

std::vector<std::uint8_t> encode_checkpoint(const Backbone<float>& backbone,
                                            const projection::Projector<float>& projector,
                                            const ad::Optimizer<float>& optimizer);
// Parses everything before building any state; errors leave nothing behind.
Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes);

// Writes to a temporary sibling and renames into place.
void save_checkpoint(const std::filesystem::path& path, const Backbone<float>& backbone,
                     const projection::Projector<float>& projector, const ad::Optimizer<float>& optimizer);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace hill::models
