#pragma once

// Checkpoint container: one flat parameter array, a manifest of named
// slices with their shapes, and the hash of the config that produced it.

#include <string>
#include <vector>

#include "maad/agent.hpp"
#include "maad/idm.hpp"
#include "maad/trainer.hpp"

namespace maad {

struct CheckpointEntry {
  std::string name;
  std::vector<int> shape;  // layer sizes for networks, dimensions otherwise
  Vec values;
};

struct Checkpoint {
  std::string config_hash;
  std::vector<CheckpointEntry> entries;

  const CheckpointEntry& at(const std::string& name) const;
  bool has(const std::string& name) const;
};

Checkpoint make_checkpoint(const GaussianPolicy& policy, const std::string& config_hash);
Checkpoint make_checkpoint(const Trainer& trainer, const std::string& config_hash);

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
/// Throws IoError on a missing file and ParseError on malformed content.
Checkpoint load_checkpoint(const std::string& path);

GaussianPolicy policy_from_checkpoint(const Checkpoint& ckpt);
/// Requires the IDM slices; throws ContractViolation when absent.
MdnIdm idm_from_checkpoint(const Checkpoint& ckpt);

}  // namespace maad
