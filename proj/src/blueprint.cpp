#include "unirep/blueprint.hpp"

#include "unirep/error.hpp"

namespace unirep {

void Blueprint::validate() const {
  if (stages.empty()) throw ConfigError("blueprint: no stages");
  for (std::size_t i = 0; i < stages.size(); ++i) {
    if (stages[i].units < 1)
      throw ConfigError("blueprint: stage " + std::to_string(i + 1) + " has no units");
    if (i > 0 && stages[i].map_size >= stages[i - 1].map_size)
      throw ConfigError("blueprint: stage spatial sizes must be strictly decreasing");
  }
  if (class_counts.empty()) throw ConfigError("blueprint: no domains");
  for (std::size_t k : class_counts)
    if (k < 2) throw ConfigError("blueprint: every domain needs at least 2 classes");
  norm.validate();
}

const char* to_string(SharingMode m) {
  switch (m) {
    case SharingMode::NoSharing: return "none";
    case SharingMode::FullSharing: return "full";
    case SharingMode::DeepSharing: return "deep";
    case SharingMode::Partial: return "partial";
  }
  return "?";
}

void SharingConfig::validate(const Blueprint& blueprint) const {
  if (capacity_multiplier != 1 && capacity_multiplier != 2 && capacity_multiplier != 4)
    throw ConfigError("sharing: capacity multiplier must be 1, 2 or 4, got " +
                      std::to_string(capacity_multiplier));
  if (mode == SharingMode::FullSharing) {
    for (std::size_t k : blueprint.class_counts)
      if (k != blueprint.class_counts.front())
        throw ConfigError("sharing: full sharing requires equal class counts, got " +
                          std::to_string(blueprint.class_counts.front()) + " vs " +
                          std::to_string(k));
  }
  if (mode == SharingMode::Partial) {
    if (partial_first < 1 || partial_last > blueprint.stages.size() ||
        partial_first > partial_last)
      throw ConfigError("sharing: partial shared block range [" +
                        std::to_string(partial_first) + "," + std::to_string(partial_last) +
                        "] is not a non-empty range within 1.." +
                        std::to_string(blueprint.stages.size()));
  }
}

Blueprint build_blueprint(const std::string& preset, std::size_t capacity_multiplier,
                          const NormStrategy& norm,
                          const std::vector<std::size_t>& class_counts) {
  if (capacity_multiplier != 1 && capacity_multiplier != 2 && capacity_multiplier != 4)
    throw ConfigError("build_blueprint: capacity multiplier must be 1, 2 or 4, got " +
                      std::to_string(capacity_multiplier));
  Blueprint bp;
  bp.preset = preset;
  bp.norm = norm;
  bp.capacity_multiplier = capacity_multiplier;
  bp.class_counts = class_counts;
  const std::size_t m = capacity_multiplier;
  if (preset == "resnet38") {
    bp.default_input_size = 64;
    bp.stages = {{64, 16 * m, 4}, {32, 32 * m, 4}, {16, 128 * m, 4}, {8, 256 * m, 4}};
  } else if (preset == "desk8") {
    bp.default_input_size = 16;
    bp.stages = {{16, 8 * m, 2}, {8, 16 * m, 2}};
  } else {
    throw ConfigError("build_blueprint: unknown preset '" + preset + "'");
  }
  bp.validate();
  return bp;
}

}  // namespace unirep
