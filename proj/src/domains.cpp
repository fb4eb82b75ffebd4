#include "unirep/domains.hpp"

#include <algorithm>
#include <cmath>

#include "unirep/error.hpp"
#include "unirep/rng.hpp"

namespace unirep {

SplitAssignment split(const Dataset& dataset, double ratio, std::uint64_t seed) {
  if (ratio <= 0.0 || ratio >= 1.0)
    throw ConfigError("split: ratio must be in (0,1), got " + std::to_string(ratio));
  const std::size_t n = dataset.size();
  std::vector<std::uint32_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = static_cast<std::uint32_t>(i);
  Rng rng(derive_seed(seed, rng_tag::kDataSplit));
  for (std::size_t i = n; i > 1; --i)
    std::swap(order[i - 1], order[rng.uniform_int(i)]);
  const std::size_t n_train =
      static_cast<std::size_t>(std::llround(ratio * static_cast<double>(n)));
  SplitAssignment out;
  out.train.assign(order.begin(), order.begin() + n_train);
  out.val.assign(order.begin() + n_train, order.end());
  std::sort(out.train.begin(), out.train.end());
  std::sort(out.val.begin(), out.val.end());
  return out;
}

WhitenStats whiten(Dataset& dataset) {
  if (dataset.split.empty())
    throw ConfigError("whiten: dataset has no split assignment; whitening statistics "
                      "are computed from the training split only");
  const std::size_t c = dataset.images.channels();
  const std::size_t per_instance = dataset.images.instance_size();
  const std::size_t pixels_per_instance = per_instance / c;

  // Read training-split pixels only: validation data never feeds the stats.
  std::vector<double> mean(c, 0.0), var(c, 0.0);
  for (std::uint32_t idx : dataset.split.train) {
    const float* p = dataset.images.instance(idx);
    for (std::size_t i = 0; i < pixels_per_instance; ++i)
      for (std::size_t j = 0; j < c; ++j) mean[j] += static_cast<double>(p[i * c + j]);
  }
  const double n = static_cast<double>(dataset.split.train.size() * pixels_per_instance);
  for (std::size_t j = 0; j < c; ++j) mean[j] /= n;
  for (std::uint32_t idx : dataset.split.train) {
    const float* p = dataset.images.instance(idx);
    for (std::size_t i = 0; i < pixels_per_instance; ++i)
      for (std::size_t j = 0; j < c; ++j) {
        const double d = static_cast<double>(p[i * c + j]) - mean[j];
        var[j] += d * d;
      }
  }
  WhitenStats stats;
  stats.mean.resize(c);
  stats.std_dev.resize(c);
  for (std::size_t j = 0; j < c; ++j) {
    const double sd = std::sqrt(var[j] / n);
    if (sd <= 0.0)
      throw DegenerateChannelError("whiten: channel " + std::to_string(j) +
                                   " has zero standard deviation on the training split");
    stats.mean[j] = static_cast<float>(mean[j]);
    stats.std_dev[j] = static_cast<float>(sd);
  }
  std::vector<float> inv(c);
  for (std::size_t j = 0; j < c; ++j) inv[j] = 1.0f / stats.std_dev[j];
  float* p = dataset.images.data();
  for (std::size_t i = 0; i < dataset.images.size(); i += c)
    for (std::size_t j = 0; j < c; ++j) p[i + j] = (p[i + j] - stats.mean[j]) * inv[j];
  dataset.descriptor.whiten_mean = stats.mean;
  dataset.descriptor.whiten_std = stats.std_dev;
  return stats;
}

Dataset replicate_to_rgb(const Dataset& dataset) {
  if (dataset.images.channels() != 1)
    throw ConfigError("replicate_to_rgb: dataset already has " +
                      std::to_string(dataset.images.channels()) + " channels");
  Dataset out;
  out.descriptor = dataset.descriptor;
  out.descriptor.channels = 3;
  out.labels = dataset.labels;
  out.split = dataset.split;
  out.images = Tensor4(dataset.images.rows(), dataset.images.cols(), 3,
                       dataset.images.batch());
  const float* src = dataset.images.data();
  float* dst = out.images.data();
  for (std::size_t i = 0; i < dataset.images.size(); ++i) {
    dst[3 * i] = src[i];
    dst[3 * i + 1] = src[i];
    dst[3 * i + 2] = src[i];
  }
  return out;
}

}  // namespace unirep
