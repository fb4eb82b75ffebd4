#ifndef UNIREP_DOMAINS_HPP_
#define UNIREP_DOMAINS_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "unirep/tensor.hpp"

namespace unirep {

/// One classification domain: shapes, class count, augmentation rule and the
/// whitening statistics computed from its training split.
struct DomainDescriptor {
  std::size_t id = 1;  // 1-based index d
  std::string name = "domain";
  std::size_t height = 16, width = 16, channels = 3;
  std::size_t classes = 2;  // K_d
  bool flip_allowed = true;
  std::vector<float> whiten_mean;  // per channel, empty until whitened
  std::vector<float> whiten_std;
  double split_ratio = 0.8;
};

struct SplitAssignment {
  std::vector<std::uint32_t> train;  // ascending example indices
  std::vector<std::uint32_t> val;

  bool empty() const { return train.empty() && val.empty(); }
};

/// Immutable after construction; safe for concurrent readers.
struct Dataset {
  DomainDescriptor descriptor;
  Tensor4 images;  // H x W x C x N
  std::vector<int> labels;
  SplitAssignment split;

  std::size_t size() const { return labels.size(); }
};

struct WhitenStats {
  std::vector<float> mean;
  std::vector<float> std_dev;
};

/// Seeded uniform train/val assignment with |train| = round(ratio * N).
SplitAssignment split(const Dataset& dataset, double ratio, std::uint64_t seed);

/// Standardizes every channel to zero mean and unit standard deviation.
/// Statistics come from the training split only and are applied identically
/// to the validation examples; the split must be assigned first.
WhitenStats whiten(Dataset& dataset);

/// Desk-scale stand-in for real datasets: K low-frequency class prototypes
/// with pairwise pixel distance >= margin, plus per-pixel Gaussian noise,
/// shifted per domain by (mean_offset, variance_scale) to emulate
/// inter-domain statistical shift.
struct SynthSpec {
  std::size_t classes = 5;
  std::size_t n_per_class = 200;
  std::size_t image_size = 16;
  std::size_t channels = 3;
  double mean_offset = 0.0;
  double variance_scale = 1.0;
  double margin = 4.0;
  double noise_std = 0.5;
  std::uint64_t seed = 1;
  // Synthetic prototypes are orientation-specific patterns, treated like
  // characters: no flip augmentation unless explicitly enabled.
  bool flip_allowed = false;
  std::string name = "synth";
  double split_ratio = 0.8;

  void validate() const;
};

Dataset generate_synthetic(const SynthSpec& spec);

// UDRD binary dataset file, little-endian:
//   "UDRD" | version u32=1 | N u32 | H u32 | W u32 | C u32 | K u32 |
//   flip_allowed u8 | 3 reserved bytes | N*H*W*C float32 pixels
//   (instance-major, then row, col, channel) | N u32 labels
Dataset load_binary(const std::string& path);
void save_binary(const Dataset& dataset, const std::string& path);

/// Replicates a single-channel dataset into three identical channels.
Dataset replicate_to_rgb(const Dataset& dataset);

}  // namespace unirep

#endif  // UNIREP_DOMAINS_HPP_
