#pragma once

#include <cstdint>
#include <filesystem>

#include "ctxspot/config.hpp"
#include "ctxspot/network.hpp"

namespace ctxspot {

/// Checkpoint layout, all little-endian:
///   8 bytes  magic "CTXSPOT\0"
///   u32      format version
///   u64      hash of the network shape derived from the config
///   u32      block count
///   per block: u32 rows, u32 cols, rows*cols float32 values
inline constexpr std::uint32_t kCheckpointVersion = 1;

std::uint64_t shape_hash(const NetworkShape& shape);

void save_checkpoint(const ModelParams<float>& params, const SpottingConfig& cfg,
                     const std::filesystem::path& path);

/// Throws FormatError on a bad magic/version, or when the stored shape hash
/// or block shapes differ from the network built from `cfg`.
ModelParams<float> load_checkpoint(const std::filesystem::path& path,
                                   const SpottingConfig& cfg);

}  // namespace ctxspot
