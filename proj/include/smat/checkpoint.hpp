#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "smat/policy.hpp"

namespace smat {

// Persisted training state between stages. stage 0 is the freshly
// initialized state before stage 1.
struct Checkpoint {
  static constexpr std::uint32_t kVersion = 1;

  int stage = 0;
  long long steps = 0;  // environment steps collected in this stage
  PolicyNet human;
  PolicyNet exo;
  PolicyNet critic;
  std::uint64_t config_hash = 0;
  std::string rng_state;  // trainer rng, textual engine state

  bool operator==(const Checkpoint& o) const = default;
};

std::string serialize_checkpoint(const Checkpoint& ckpt);
// Throws CorruptCheckpoint on bad magic, version, manifest, size or checksum.
Checkpoint parse_checkpoint(std::string_view bytes);

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

// Throws DimensionMismatch unless the networks fit a walker with the given
// muscle count (the human input may carry the two exo-command dims).
void check_dimensions(const Checkpoint& ckpt, int num_muscles);

std::uint64_t fnv1a64(std::string_view bytes);

std::string rng_to_string(const Rng& rng);
Rng rng_from_string(const std::string& state);  // throws CorruptCheckpoint

}  // namespace smat
