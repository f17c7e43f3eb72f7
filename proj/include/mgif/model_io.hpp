#pragma once

#include <filesystem>

#include "mgif/model.hpp"

namespace mgif {

// Checkpoint format ("MGMD"):
//   magic "MGMD", version u16, layer count u16,
//   then per layer: kind u8, rank u8, output extents u32[rank],
//     meta u32 (conv kernel edge, otherwise 0),
//     row-major f32 little-endian parameters (dense/conv: weights then bias),
//   trailing CRC32 over everything before it.
// The first record is the input pseudo-layer (kind 0) carrying the input
// shape and no parameters.
void save_model(const Model& m, const std::filesystem::path& path);
Model load_model(const std::filesystem::path& path, const std::string& id = "");

// Hash of the serialized form (without reading/writing disk); stable model
// identity for fingerprint files.
std::uint64_t model_content_hash(const Model& m);

}  // namespace mgif
