#pragma once

// Run configuration: an INI file with [run], [env] and [train] sections.
// Algorithms are aliases over the same trainer.

#include <cstdint>
#include <string>
#include <vector>

#include "maad/envs.hpp"
#include "maad/trainer.hpp"

namespace maad {

struct RunConfig {
  std::string algorithm = "maad-ail";
  EnvSpec env = EnvSpec::linear_point();
  TrainConfig train;
  std::string expert_path;
  std::string output_dir = "runs";
  std::vector<std::uint64_t> seeds{0, 1, 2};

  bool supervised_only() const { return algorithm == "bc"; }
};

const std::vector<std::string>& known_algorithms();

/// Forces backend, regularizer and lambda_reg to agree with the algorithm:
/// gaifo / tmo / oto drop the regularizer, gail-bc and bc use true actions.
/// Throws UsageError on an unknown algorithm or an empty seed list.
void apply_algorithm(RunConfig& cfg);

/// Parses an INI file. Unknown keys and malformed values raise ParseError;
/// a missing file raises IoError.
RunConfig load_run_config(const std::string& path);
RunConfig parse_run_config(const std::string& text);

/// Fully-resolved INI text; parse_run_config(to_ini(c)) reproduces c.
std::string to_ini(const RunConfig& cfg);

/// 64-bit FNV-1a hash of the text, as 16 hex digits.
std::string fnv1a_hex(const std::string& text);

EnvSpec env_from_name(const std::string& name, int position_dim);

}  // namespace maad
