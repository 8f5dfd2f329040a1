#pragma once

#include <filesystem>
#include <optional>
#include <vector>

#include "json.hpp"
#include "sdyn/neuralnet/adam.hpp"
#include "sdyn/neuralnet/mlp.hpp"

namespace sdyn {

inline constexpr std::uint32_t kCheckpointVersion = 1;

// A set of networks, optionally with the Adam state over their concatenated
// parameters, plus free-form metadata.
struct Checkpoint {
  std::vector<Mlp> networks;
  std::optional<AdamState> optimizer;
  nlohmann::json metadata = nlohmann::json::object();
};

// Binary "PDNN", little-endian:
//   char[4] magic, u32 version, u32 network_count,
//   per network: u32 dim_count, u64 dims[dim_count], f64 params[...]
//   u8 has_optimizer; if set: u64 step, u64 epoch, f64 lr, beta1, beta2,
//     epsilon, lr_decay, u64 length, f64 m[length], f64 v[length]
//   u64 metadata_length, char metadata_json[metadata_length]
//   u64 FNV-1a hash of every preceding byte
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);

// Throws Error(CorruptCheckpoint) on truncation, trailing bytes or a hash
// mismatch and Error(VersionMismatch) on an unknown version.
Checkpoint load_checkpoint(const std::filesystem::path& path);

// Throws Error(ShapeMismatch) unless the networks have exactly these dims.
void require_architecture(const Checkpoint& checkpoint,
                          const std::vector<std::vector<std::size_t>>& layer_dims);

}  // namespace sdyn
