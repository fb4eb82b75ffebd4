#ifndef UNIREP_CHECKPOINT_HPP_
#define UNIREP_CHECKPOINT_HPP_

#include <cstdint>
#include <string>

#include "unirep/model.hpp"
#include "unirep/trainer.hpp"

namespace unirep {

/// Single-file, versioned, little-endian binary snapshot of a run: all
/// parameters including per-domain collections and moment counts, the
/// optimizer state, class-pairing permutations, iterator positions and the
/// config hash. Round trips are bit-exact.
struct CheckpointData {
  std::uint64_t config_hash = 0;
  Model model;
  TrainerState state;
};

void save_checkpoint(const std::string& path, const Model& model,
                     const TrainerState& state, std::uint64_t config_hash);

CheckpointData load_checkpoint(const std::string& path);

/// Structural compatibility (blueprint, sharing, domain count) for eval;
/// resume additionally requires an exact config-hash match.
void check_compatibility(const CheckpointData& checkpoint, const Model& expected,
                         std::uint64_t config_hash, bool resume);

}  // namespace unirep

#endif  // UNIREP_CHECKPOINT_HPP_
