#include "unirep/augment.hpp"

#include "unirep/error.hpp"

namespace unirep {

std::size_t augment_pad(std::size_t height) {
  const std::size_t pad = height / 8;
  return pad < 1 ? 1 : pad;
}

void apply_crop(const float* src, float* dst, std::size_t h, std::size_t w,
                std::size_t c, std::size_t pad, const CropChoice& choice) {
  const std::size_t padded_w = w + 2 * pad;
  for (std::size_t v = 0; v < h; ++v) {
    const long vi = static_cast<long>(v + choice.off_v) - static_cast<long>(pad);
    for (std::size_t u = 0; u < w; ++u) {
      std::size_t up = u + choice.off_u;
      if (choice.flip) up = padded_w - 1 - up;
      const long ui = static_cast<long>(up) - static_cast<long>(pad);
      float* out = dst + (v * w + u) * c;
      if (vi < 0 || vi >= static_cast<long>(h) || ui < 0 || ui >= static_cast<long>(w)) {
        for (std::size_t j = 0; j < c; ++j) out[j] = 0.0f;
      } else {
        const float* in = src + (static_cast<std::size_t>(vi) * w +
                                 static_cast<std::size_t>(ui)) * c;
        for (std::size_t j = 0; j < c; ++j) out[j] = in[j];
      }
    }
  }
}

CropChoice draw_crop(std::size_t h, std::size_t w, bool flip_allowed, Rng& rng) {
  const std::size_t pad = augment_pad(h);
  (void)w;
  CropChoice choice;
  choice.off_v = rng.uniform_int(2 * pad + 1);
  choice.off_u = rng.uniform_int(2 * pad + 1);
  choice.flip = flip_allowed && rng.coin();
  return choice;
}

Tensor4 augment(const Tensor4& image, const DomainDescriptor& domain, Rng& rng) {
  if (image.rows() != domain.height || image.cols() != domain.width ||
      image.channels() != domain.channels)
    throw DimensionError("augment: image dims " + image.dims_str() +
                         " do not match the domain input spec");
  const std::size_t pad = augment_pad(image.rows());
  Tensor4 out(image.rows(), image.cols(), image.channels(), image.batch());
  for (std::size_t t = 0; t < image.batch(); ++t) {
    const CropChoice choice =
        draw_crop(image.rows(), image.cols(), domain.flip_allowed, rng);
    apply_crop(image.instance(t), out.instance(t), image.rows(), image.cols(),
               image.channels(), pad, choice);
  }
  return out;
}

}  // namespace unirep
