#pragma once

#include <string>

#include "tiq/nn/network.hpp"

namespace tiq::nn {

/// Checkpoint file: "TIQW", u64 spec fingerprint, u32 layer count, per-layer
/// u64 offsets (weight, bias, state), u64 parameter count, u64 state count,
/// float32 LE parameters then state, trailing CRC32 of all preceding bytes.
void save_checkpoint(const std::string& path, const NetworkSpec& spec, const NetworkParams<float>& params);

/// Loads parameters for `spec`; a checkpoint written for a different spec is rejected.
NetworkParams<float> load_checkpoint(const std::string& path, const NetworkSpec& spec);

}  // namespace tiq::nn
