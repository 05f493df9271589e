#pragma once

#include <cstdint>
#include <string>

#include "pointmac/model.hpp"
#include "pointmac/params.hpp"

namespace pointmac {

// On-disk parameter archive: format version, the five parameter groups by
// name, the loss-balance logits, the model configuration needed to rebuild
// the network, and the hash of the run configuration that produced it.
struct Checkpoint {
  ModelConfig model_config;
  std::uint64_t config_hash = 0;
  std::string phase;  // training phase that wrote it: warmstart | meta | primary
  long iteration = 0;
  ParameterSet params;
};

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);

// Throws std::runtime_error on bad magic, version mismatch, or a missing
// parameter group.
Checkpoint load_checkpoint(const std::string& path);

}  // namespace pointmac
