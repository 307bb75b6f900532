#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "wadapt/nn/model.hpp"

namespace wadapt::nn {

// Little-endian layout: "WADP", u32 version, eight u32 architecture fields
// (W, F, K, C1, C2, H, N, W'), then sixteen groups, each a u64 element count
// followed by that many binary64 values in row-major order.

inline constexpr std::uint32_t kCheckpointVersion = 1;

std::vector<std::uint8_t> serialize(const ModelParams& params);

/// Throws BadMagic, VersionMismatch, Truncated, DimensionMismatch.
ModelParams deserialize(const std::vector<std::uint8_t>& bytes);

void save_checkpoint(const ModelParams& params, const std::filesystem::path& path);
ModelParams load_checkpoint(const std::filesystem::path& path);

/// Byte range of one serialized group, count field included.
struct GroupRegion {
  std::string name;
  std::size_t offset = 0;
  std::size_t length = 0;
};

/// Region table for a checkpoint of the given architecture, in file order.
std::vector<GroupRegion> checkpoint_layout(const Architecture& arch);

}  // namespace wadapt::nn
