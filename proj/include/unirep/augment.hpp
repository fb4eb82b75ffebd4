#ifndef UNIREP_AUGMENT_HPP_
#define UNIREP_AUGMENT_HPP_

#include <cstddef>

#include "unirep/domains.hpp"
#include "unirep/rng.hpp"
#include "unirep/tensor.hpp"

namespace unirep {

/// Pad width for a given image height: 8 px at the paper's 64 px images,
/// proportionally smaller (min 1) for desk-scale sizes.
std::size_t augment_pad(std::size_t height);

struct CropChoice {
  std::size_t off_v = 0;
  std::size_t off_u = 0;
  bool flip = false;
};

/// Zero-pads by `pad` on all sides, crops back to the original size at the
/// given offset, optionally from the horizontally flipped padded image.
void apply_crop(const float* src, float* dst, std::size_t h, std::size_t w,
                std::size_t c, std::size_t pad, const CropChoice& choice);

/// Draw order: off_v, off_u, then the flip coin (only when the domain allows
/// flips).
CropChoice draw_crop(std::size_t h, std::size_t w, bool flip_allowed, Rng& rng);

/// Random pad-and-crop with optional horizontal flip on one image (T == 1).
Tensor4 augment(const Tensor4& image, const DomainDescriptor& domain, Rng& rng);

}  // namespace unirep

#endif  // UNIREP_AUGMENT_HPP_
