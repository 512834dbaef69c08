#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "scopeloc/model.hpp"

namespace scopeloc {

// Checkpoint layout (all integers little-endian):
//   8 bytes   magic "SCOPELOC"
//   u32       format version (1)
//   u32       header length H
//   H bytes   UTF-8 JSON header with keys
//               "format"          "scopeloc-checkpoint"
//               "version"         1
//               "config"          ModelConfig::to_json()
//               "config_hash"     16 hex digits of config_hash(config)
//               "seed"            training seed
//               "parameter_count" number of records that follow
//   records, in network parameter order:
//     u32 name length, name bytes, u32 rank, rank x u32 extents,
//     product(extents) IEEE-754 binary32 values.

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  ModelConfig config;
  std::uint64_t seed = 0;
  std::map<std::string, Tensor<float>> parameters;
};

template <typename Real>
void save_checkpoint(const std::string& path, const SpanNetwork<Real>& network,
                     std::uint64_t seed);

Checkpoint read_checkpoint(const std::string& path);

/// Copies checkpoint tensors into a network built from the same config.
template <typename Real>
void load_parameters(const Checkpoint& checkpoint, SpanNetwork<Real>& network);

/// Builds a float network from a checkpoint file.
SpanNetwork<float> load_network(const std::string& path, std::uint64_t* seed = nullptr);

}  // namespace scopeloc
