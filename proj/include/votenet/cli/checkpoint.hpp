#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>

#include "votenet/network/network.hpp"

namespace votenet::cli {

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Binary layout: "VNETCKPT", u32 version, u64-prefixed config text, u32
/// tensor count, then per tensor a name, rank, dims and raw doubles. All
/// integers little-endian as written by the host.
struct Checkpoint {
  std::string config_text;
  net::ParameterSet params;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

void save_checkpoint(const std::filesystem::path& path, const std::string& config_text,
                     const net::ParameterSet& params);
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// Throws CheckpointError listing every tensor whose name or shape differs
/// from what `config` expects.
void check_compatible(const net::ParameterSet& params, const net::NetworkConfig& config);

}  // namespace votenet::cli
