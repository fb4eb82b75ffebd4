#ifndef UNIREP_BLUEPRINT_HPP_
#define UNIREP_BLUEPRINT_HPP_

#include <cstddef>
#include <string>
#include <vector>

#include "unirep/normalization.hpp"

namespace unirep {

struct StageSpec {
  std::size_t map_size;  // spatial size at the default input resolution
  std::size_t filters;
  std::size_t units;
};

/// Structural description of a residual network: stem conv, stages of
/// pre-activation units, global-average-pool head with one classifier per
/// domain (or a shared one under full sharing).
struct Blueprint {
  std::string preset;
  std::size_t input_channels = 3;
  std::size_t default_input_size = 0;
  std::vector<StageSpec> stages;
  NormStrategy norm;
  std::size_t capacity_multiplier = 1;
  std::vector<std::size_t> class_counts;  // K_d, indexed by domain - 1

  std::size_t num_domains() const { return class_counts.size(); }
  void validate() const;
};

enum class SharingMode { NoSharing, FullSharing, DeepSharing, Partial };

const char* to_string(SharingMode m);

/// Which parameters are bound across domains. Partial sharing names a
/// contiguous, non-empty range of stages (1-based) whose weights are shared;
/// the stem follows stage 1 and the classifier stays per-domain.
struct SharingConfig {
  SharingMode mode = SharingMode::DeepSharing;
  std::size_t capacity_multiplier = 1;
  std::size_t partial_first = 1;
  std::size_t partial_last = 1;

  void validate(const Blueprint& blueprint) const;
};

/// Builds the preset architectures:
///   resnet38 - 4 stages x 4 units, map sizes {64,32,16,8},
///              filters {16,32,128,256} * multiplier
///   desk8    - 2 stages x 2 units, map sizes {16,8},
///              filters {8,16} * multiplier (a desk-scale reduction of the
///              same family, not a published architecture)
Blueprint build_blueprint(const std::string& preset, std::size_t capacity_multiplier,
                          const NormStrategy& norm,
                          const std::vector<std::size_t>& class_counts);

}  // namespace unirep

#endif  // UNIREP_BLUEPRINT_HPP_
