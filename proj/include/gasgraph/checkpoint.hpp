#pragma once

#include <cstdint>
#include <filesystem>

#include <nlohmann/json.hpp>

#include "gasgraph/parameters.hpp"

namespace gasgraph {

/// Serialized model: architecture config, named parameters, seed and epoch.
///
/// Binary layout (little-endian):
///   magic    8 bytes  "GGCKPT\0\0"
///   version  u32
///   seed     u64
///   epoch    u64
///   config   u64 length + UTF-8 JSON text
///   count    u64 number of tensors, then per tensor:
///            u64 name length + name, u64 rank, rank x u64 extents,
///            numel x f64 values
struct Checkpoint {
  static constexpr std::uint32_t kFormatVersion = 1;

  std::uint32_t format_version = kFormatVersion;
  nlohmann::json architecture = nlohmann::json::object();
  ParameterSet parameters;
  std::uint64_t seed = 0;
  std::uint64_t epoch = 0;
};

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace gasgraph
