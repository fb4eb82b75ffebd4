#ifndef UNIREP_NORMALIZATION_HPP_
#define UNIREP_NORMALIZATION_HPP_

#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "unirep/tensor.hpp"

namespace unirep {

constexpr double kNormEps = 1e-5;

/// Per-channel scale s and bias b applied after a conv/linear or
/// normalization layer; the domain-dependent parameter set of the method.
template <typename T>
struct ScaleParamsT {
  std::vector<T> s;
  std::vector<T> b;

  ScaleParamsT() = default;
  explicit ScaleParamsT(std::size_t channels)
      : s(channels, T(1)), b(channels, T(0)) {}

  std::size_t channels() const { return s.size(); }
};

/// Accumulated per-channel batch means and variances, frozen at deploy time.
/// count == 0 means the moments are unset and unusable for testing.
template <typename T>
struct MomentParamsT {
  std::vector<T> mu;
  std::vector<T> sigma2;
  std::size_t count = 0;

  MomentParamsT() = default;
  explicit MomentParamsT(std::size_t channels)
      : mu(channels, T(0)), sigma2(channels, T(0)) {}

  std::size_t channels() const { return mu.size(); }
};

using ScaleParams = ScaleParamsT<float>;
using MomentParams = MomentParamsT<float>;

enum class NormKind { BN, BN_PLUS, IN, NONE };
enum class ParamScope { Universal, Domain };
enum class MomentScope { Universal, Domain, None };

inline const char* to_string(NormKind k) {
  switch (k) {
    case NormKind::BN: return "bn";
    case NormKind::BN_PLUS: return "bn_plus";
    case NormKind::IN: return "in";
    case NormKind::NONE: return "none";
  }
  return "?";
}

inline const char* to_string(ParamScope s) {
  return s == ParamScope::Universal ? "universal" : "domain";
}

inline const char* to_string(MomentScope s) {
  switch (s) {
    case MomentScope::Universal: return "universal";
    case MomentScope::Domain: return "domain";
    case MomentScope::None: return "none";
  }
  return "?";
}

struct NormStrategy {
  NormKind kind = NormKind::BN;
  ParamScope scale_scope = ParamScope::Domain;
  MomentScope moment_scope = MomentScope::Domain;

  void validate() const {
    if (kind == NormKind::BN) {
      if (moment_scope == MomentScope::None)
        throw ConfigError("NormStrategy: BN requires moment_scope universal or domain");
    } else if (moment_scope != MomentScope::None) {
      throw ConfigError(std::string("NormStrategy: ") + to_string(kind) +
                        " computes moments on the fly and requires moment_scope none");
    }
  }

  bool uses_batch_stats() const {
    return kind == NormKind::BN || kind == NormKind::BN_PLUS;
  }

  std::string label() const {
    std::string out = to_string(kind);
    out += "(";
    out += to_string(scale_scope);
    if (kind == NormKind::BN) {
      out += ",";
      out += to_string(moment_scope);
    }
    out += ")";
    return out;
  }
};

/// The collections S, B (scales/biases) and U, Sigma (moments) of one
/// normalization site, either one entry per domain or a single shared entry.
template <typename T>
struct DomainParamCollectionsT {
  ParamScope scale_scope = ParamScope::Universal;
  MomentScope moment_scope = MomentScope::None;
  std::vector<ScaleParamsT<T>> domain_scales;     // size D iff scale_scope Domain
  std::optional<ScaleParamsT<T>> shared_scale;    // set iff scale_scope Universal
  std::vector<MomentParamsT<T>> domain_moments;   // size D iff moment_scope Domain
  std::optional<MomentParamsT<T>> shared_moments; // set iff moment_scope Universal

  static DomainParamCollectionsT create(const NormStrategy& strategy,
                                        std::size_t num_domains, std::size_t channels) {
    strategy.validate();
    DomainParamCollectionsT coll;
    coll.scale_scope = strategy.scale_scope;
    coll.moment_scope = strategy.moment_scope;
    if (strategy.scale_scope == ParamScope::Domain)
      coll.domain_scales.assign(num_domains, ScaleParamsT<T>(channels));
    else
      coll.shared_scale = ScaleParamsT<T>(channels);
    if (strategy.moment_scope == MomentScope::Domain)
      coll.domain_moments.assign(num_domains, MomentParamsT<T>(channels));
    else if (strategy.moment_scope == MomentScope::Universal)
      coll.shared_moments = MomentParamsT<T>(channels);
    return coll;
  }

  std::size_t num_domains() const {
    return scale_scope == ParamScope::Domain ? domain_scales.size()
                                             : domain_moments.size();
  }
};

using DomainParamCollections = DomainParamCollectionsT<float>;

namespace detail {
template <typename T>
inline void check_domain_index(std::size_t d, std::size_t count) {
  (void)sizeof(T);
  if (d < 1 || d > count)
    throw DomainIndexError("mux: domain id " + std::to_string(d) +
                           " out of [1," + std::to_string(count) + "]");
}
}  // namespace detail

/// The muxer: extracts domain d's parameter set (1-based). In universal mode
/// the shared entry is returned regardless of d.
template <typename T>
std::pair<ScaleParamsT<T>*, MomentParamsT<T>*> mux(std::size_t d,
                                                   DomainParamCollectionsT<T>& coll) {
  ScaleParamsT<T>* scale = nullptr;
  if (coll.scale_scope == ParamScope::Domain) {
    detail::check_domain_index<T>(d, coll.domain_scales.size());
    scale = &coll.domain_scales[d - 1];
  } else {
    scale = &*coll.shared_scale;
  }
  MomentParamsT<T>* moments = nullptr;
  if (coll.moment_scope == MomentScope::Domain) {
    detail::check_domain_index<T>(d, coll.domain_moments.size());
    moments = &coll.domain_moments[d - 1];
  } else if (coll.moment_scope == MomentScope::Universal) {
    moments = &*coll.shared_moments;
  }
  return {scale, moments};
}

template <typename T>
std::pair<const ScaleParamsT<T>*, const MomentParamsT<T>*> mux(
    std::size_t d, const DomainParamCollectionsT<T>& coll) {
  auto r = mux(d, const_cast<DomainParamCollectionsT<T>&>(coll));
  return {r.first, r.second};
}

template <typename T>
struct BatchNormResultT {
  Tensor4T<T> y;
  MomentParamsT<T> batch_moments;
};

/// Batch normalization: per channel, (x - mu_c) / sqrt(sigma2_c + eps) with
/// mu, sigma2 averaged over rows, cols and instances. The batch must be pure;
/// that is enforced upstream. Returns the batch statistics alongside y.
template <typename T>
BatchNormResultT<T> batch_norm_forward(const Tensor4T<T>& x, double eps = kNormEps) {
  const std::size_t c = x.channels();
  const std::size_t n = x.size() / c;
  std::vector<double> mean(c, 0.0), var(c, 0.0);
  const T* p = x.data();
  for (std::size_t i = 0; i < x.size(); i += c)
    for (std::size_t j = 0; j < c; ++j) mean[j] += static_cast<double>(p[i + j]);
  for (std::size_t j = 0; j < c; ++j) mean[j] /= static_cast<double>(n);
  for (std::size_t i = 0; i < x.size(); i += c)
    for (std::size_t j = 0; j < c; ++j) {
      const double d = static_cast<double>(p[i + j]) - mean[j];
      var[j] += d * d;
    }
  for (std::size_t j = 0; j < c; ++j) var[j] /= static_cast<double>(n);

  BatchNormResultT<T> out{x.zeros_like(), MomentParamsT<T>(c)};
  std::vector<double> inv_std(c);
  for (std::size_t j = 0; j < c; ++j) {
    inv_std[j] = 1.0 / std::sqrt(var[j] + eps);
    out.batch_moments.mu[j] = static_cast<T>(mean[j]);
    out.batch_moments.sigma2[j] = static_cast<T>(var[j]);
  }
  out.batch_moments.count = 1;
  T* q = out.y.data();
  for (std::size_t i = 0; i < x.size(); i += c)
    for (std::size_t j = 0; j < c; ++j)
      q[i + j] = static_cast<T>((static_cast<double>(p[i + j]) - mean[j]) * inv_std[j]);
  debug_check_finite(out.y, "batch_norm_forward");
  return out;
}

/// Full gradient of batch_norm_forward, including the paths through the
/// batch mean and variance:
///   dx_j = inv_std * (g_j - mean(g) - xhat_j * mean(g * xhat))
template <typename T>
Tensor4T<T> batch_norm_backward(const Tensor4T<T>& x, const Tensor4T<T>& upstream,
                                double eps = kNormEps) {
  if (!x.same_dims(upstream))
    throw DimensionError("batch_norm_backward: upstream dims " + upstream.dims_str() +
                         " vs input dims " + x.dims_str());
  const std::size_t c = x.channels();
  const std::size_t n = x.size() / c;
  std::vector<double> mean(c, 0.0), var(c, 0.0);
  const T* p = x.data();
  const T* g = upstream.data();
  for (std::size_t i = 0; i < x.size(); i += c)
    for (std::size_t j = 0; j < c; ++j) mean[j] += static_cast<double>(p[i + j]);
  for (std::size_t j = 0; j < c; ++j) mean[j] /= static_cast<double>(n);
  for (std::size_t i = 0; i < x.size(); i += c)
    for (std::size_t j = 0; j < c; ++j) {
      const double d = static_cast<double>(p[i + j]) - mean[j];
      var[j] += d * d;
    }
  std::vector<double> inv_std(c), g_mean(c, 0.0), gx_mean(c, 0.0);
  for (std::size_t j = 0; j < c; ++j) {
    var[j] /= static_cast<double>(n);
    inv_std[j] = 1.0 / std::sqrt(var[j] + eps);
  }
  for (std::size_t i = 0; i < x.size(); i += c)
    for (std::size_t j = 0; j < c; ++j) {
      const double xhat = (static_cast<double>(p[i + j]) - mean[j]) * inv_std[j];
      g_mean[j] += static_cast<double>(g[i + j]);
      gx_mean[j] += static_cast<double>(g[i + j]) * xhat;
    }
  for (std::size_t j = 0; j < c; ++j) {
    g_mean[j] /= static_cast<double>(n);
    gx_mean[j] /= static_cast<double>(n);
  }
  Tensor4T<T> dx = x.zeros_like();
  T* q = dx.data();
  for (std::size_t i = 0; i < x.size(); i += c)
    for (std::size_t j = 0; j < c; ++j) {
      const double xhat = (static_cast<double>(p[i + j]) - mean[j]) * inv_std[j];
      q[i + j] = static_cast<T>(inv_std[j] * (static_cast<double>(g[i + j]) -
                                              g_mean[j] - xhat * gx_mean[j]));
    }
  debug_check_finite(dx, "batch_norm_backward");
  return dx;
}

/// Instance normalization: same expression as batch normalization but with
/// means and variances per (channel, instance) over the spatial dims only.
/// Coincides with batch_norm_forward when T == 1.
template <typename T>
Tensor4T<T> instance_norm_forward(const Tensor4T<T>& x, double eps = kNormEps) {
  const std::size_t c = x.channels();
  const std::size_t hw = x.rows() * x.cols();
  Tensor4T<T> y = x.zeros_like();
  std::vector<double> mean(c), var(c);
  for (std::size_t t = 0; t < x.batch(); ++t) {
    const T* p = x.instance(t);
    T* q = y.instance(t);
    std::fill(mean.begin(), mean.end(), 0.0);
    std::fill(var.begin(), var.end(), 0.0);
    for (std::size_t i = 0; i < hw; ++i)
      for (std::size_t j = 0; j < c; ++j) mean[j] += static_cast<double>(p[i * c + j]);
    for (std::size_t j = 0; j < c; ++j) mean[j] /= static_cast<double>(hw);
    for (std::size_t i = 0; i < hw; ++i)
      for (std::size_t j = 0; j < c; ++j) {
        const double d = static_cast<double>(p[i * c + j]) - mean[j];
        var[j] += d * d;
      }
    for (std::size_t j = 0; j < c; ++j)
      var[j] = 1.0 / std::sqrt(var[j] / static_cast<double>(hw) + eps);
    for (std::size_t i = 0; i < hw; ++i)
      for (std::size_t j = 0; j < c; ++j)
        q[i * c + j] = static_cast<T>(
            (static_cast<double>(p[i * c + j]) - mean[j]) * var[j]);
  }
  debug_check_finite(y, "instance_norm_forward");
  return y;
}

template <typename T>
Tensor4T<T> instance_norm_backward(const Tensor4T<T>& x, const Tensor4T<T>& upstream,
                                   double eps = kNormEps) {
  if (!x.same_dims(upstream))
    throw DimensionError("instance_norm_backward: upstream dims " +
                         upstream.dims_str() + " vs input dims " + x.dims_str());
  const std::size_t c = x.channels();
  const std::size_t hw = x.rows() * x.cols();
  Tensor4T<T> dx = x.zeros_like();
  std::vector<double> mean(c), var(c), inv_std(c), g_mean(c), gx_mean(c);
  for (std::size_t t = 0; t < x.batch(); ++t) {
    const T* p = x.instance(t);
    const T* g = upstream.instance(t);
    T* q = dx.instance(t);
    std::fill(mean.begin(), mean.end(), 0.0);
    std::fill(var.begin(), var.end(), 0.0);
    std::fill(g_mean.begin(), g_mean.end(), 0.0);
    std::fill(gx_mean.begin(), gx_mean.end(), 0.0);
    for (std::size_t i = 0; i < hw; ++i)
      for (std::size_t j = 0; j < c; ++j) mean[j] += static_cast<double>(p[i * c + j]);
    for (std::size_t j = 0; j < c; ++j) mean[j] /= static_cast<double>(hw);
    for (std::size_t i = 0; i < hw; ++i)
      for (std::size_t j = 0; j < c; ++j) {
        const double d = static_cast<double>(p[i * c + j]) - mean[j];
        var[j] += d * d;
      }
    for (std::size_t j = 0; j < c; ++j)
      inv_std[j] = 1.0 / std::sqrt(var[j] / static_cast<double>(hw) + eps);
    for (std::size_t i = 0; i < hw; ++i)
      for (std::size_t j = 0; j < c; ++j) {
        const double xhat =
            (static_cast<double>(p[i * c + j]) - mean[j]) * inv_std[j];
        g_mean[j] += static_cast<double>(g[i * c + j]);
        gx_mean[j] += static_cast<double>(g[i * c + j]) * xhat;
      }
    for (std::size_t j = 0; j < c; ++j) {
      g_mean[j] /= static_cast<double>(hw);
      gx_mean[j] /= static_cast<double>(hw);
    }
    for (std::size_t i = 0; i < hw; ++i)
      for (std::size_t j = 0; j < c; ++j) {
        const double xhat =
            (static_cast<double>(p[i * c + j]) - mean[j]) * inv_std[j];
        q[i * c + j] = static_cast<T>(
            inv_std[j] * (static_cast<double>(g[i * c + j]) - g_mean[j] -
                          xhat * gx_mean[j]));
      }
  }
  return dx;
}

/// Normalization with frozen moments: a per-channel affine map, applicable
/// instance by instance at test time.
template <typename T>
Tensor4T<T> frozen_norm_forward(const Tensor4T<T>& x, const MomentParamsT<T>& moments,
                                double eps = kNormEps) {
  if (moments.count == 0)
    throw UnfrozenMomentsError("frozen_norm_forward: moments were never accumulated");
  const std::size_t c = x.channels();
  if (moments.channels() != c)
    throw DimensionError("frozen_norm_forward: moment channel axis " +
                         std::to_string(moments.channels()) + " vs C=" + std::to_string(c));
  std::vector<T> scale(c), shift(c);
  for (std::size_t j = 0; j < c; ++j) {
    scale[j] = static_cast<T>(1.0 / std::sqrt(static_cast<double>(moments.sigma2[j]) + eps));
    shift[j] = -moments.mu[j] * scale[j];
  }
  Tensor4T<T> y = x.zeros_like();
  for (std::size_t i = 0; i < x.size(); i += c)
    for (std::size_t j = 0; j < c; ++j)
      y.data()[i + j] = x.data()[i + j] * scale[j] + shift[j];
  return y;
}

/// y = s_c * x + b_c broadcast over rows, cols and instances.
template <typename T>
Tensor4T<T> scale_forward(const Tensor4T<T>& x, const ScaleParamsT<T>& p) {
  const std::size_t c = x.channels();
  if (p.s.size() != c || p.b.size() != c)
    throw DimensionError("scale_forward: parameter channel axis " +
                         std::to_string(p.s.size()) + " vs C=" + std::to_string(c));
  Tensor4T<T> y = x.zeros_like();
  for (std::size_t i = 0; i < x.size(); i += c)
    for (std::size_t j = 0; j < c; ++j)
      y.data()[i + j] = p.s[j] * x.data()[i + j] + p.b[j];
  return y;
}

template <typename T>
struct ScaleGradsT {
  Tensor4T<T> dx;
  std::vector<T> ds;
  std::vector<T> db;
};

template <typename T>
ScaleGradsT<T> scale_backward(const Tensor4T<T>& x, const ScaleParamsT<T>& p,
                              const Tensor4T<T>& upstream) {
  const std::size_t c = x.channels();
  if (p.s.size() != c)
    throw DimensionError("scale_backward: parameter channel axis mismatch");
  if (!x.same_dims(upstream))
    throw DimensionError("scale_backward: upstream dims " + upstream.dims_str());
  ScaleGradsT<T> g{x.zeros_like(), std::vector<T>(c, T(0)), std::vector<T>(c, T(0))};
  std::vector<double> ds(c, 0.0), db(c, 0.0);
  for (std::size_t i = 0; i < x.size(); i += c)
    for (std::size_t j = 0; j < c; ++j) {
      const T gv = upstream.data()[i + j];
      g.dx.data()[i + j] = gv * p.s[j];
      ds[j] += static_cast<double>(gv) * static_cast<double>(x.data()[i + j]);
      db[j] += static_cast<double>(gv);
    }
  for (std::size_t j = 0; j < c; ++j) {
    g.ds[j] = static_cast<T>(ds[j]);
    g.db[j] = static_cast<T>(db[j]);
  }
  return g;
}

/// Running arithmetic mean over all accumulated batches.
template <typename T>
MomentParamsT<T> accumulate_moments(const MomentParamsT<T>& running,
                                    const MomentParamsT<T>& batch) {
  if (running.count > 0 && running.channels() != batch.channels())
    throw DimensionError("accumulate_moments: channel axis " +
                         std::to_string(running.channels()) + " vs " +
                         std::to_string(batch.channels()));
  if (running.count == 0) {
    MomentParamsT<T> out = batch;
    out.count = 1;
    return out;
  }
  MomentParamsT<T> out = running;
  const double k = static_cast<double>(running.count);
  for (std::size_t j = 0; j < out.mu.size(); ++j) {
    out.mu[j] = static_cast<T>((k * running.mu[j] + batch.mu[j]) / (k + 1.0));
    out.sigma2[j] = static_cast<T>((k * running.sigma2[j] + batch.sigma2[j]) / (k + 1.0));
  }
  out.count = running.count + 1;
  return out;
}

/// Folds frozen moments and the following scaling layer into one equivalent
/// affine: s' = s / sqrt(sigma2 + eps), b' = b - s * mu / sqrt(sigma2 + eps).
template <typename T>
ScaleParamsT<T> deploy_fold(const MomentParamsT<T>& moments, const ScaleParamsT<T>& scale,
                            double eps = kNormEps) {
  if (moments.count == 0)
    throw UnfrozenMomentsError("deploy_fold: moments were never accumulated");
  if (moments.channels() != scale.channels())
    throw DimensionError("deploy_fold: channel axis mismatch");
  ScaleParamsT<T> out(scale.channels());
  for (std::size_t j = 0; j < scale.channels(); ++j) {
    const T inv = static_cast<T>(
        1.0 / std::sqrt(static_cast<double>(moments.sigma2[j]) + eps));
    out.s[j] = scale.s[j] * inv;
    out.b[j] = scale.b[j] - scale.s[j] * moments.mu[j] * inv;
  }
  return out;
}

enum class Phase { Train, Test };

template <typename T>
struct NormalizeResultT {
  Tensor4T<T> y;
  // Batch statistics, present only for BN in train mode (forwarded to the
  // moment accumulator by the training loop).
  std::optional<MomentParamsT<T>> batch_moments;
};

/// Strategy dispatch for one normalization site. batch_domains carries the
/// batch's domain tags; BN and BN+ reject batches tagged with more than one
/// domain.
template <typename T>
NormalizeResultT<T> normalize(const Tensor4T<T>& x, const NormStrategy& strategy,
                              std::size_t d, const DomainParamCollectionsT<T>& coll,
                              Phase phase,
                              const std::vector<int>& batch_domains = {}) {
  strategy.validate();
  if (strategy.uses_batch_stats() && batch_domains.size() > 1)
    throw PurityViolationError(
        std::string("normalize: ") + to_string(strategy.kind) +
        " requires pure batches, got " + std::to_string(batch_domains.size()) +
        " domain tags");
  auto [scale, moments] = mux(d, coll);
  NormalizeResultT<T> out{Tensor4T<T>(), std::nullopt};
  switch (strategy.kind) {
    case NormKind::BN: {
      if (phase == Phase::Train) {
        auto r = batch_norm_forward(x);
        out.y = scale_forward(r.y, *scale);
        out.batch_moments = std::move(r.batch_moments);
      } else {
        if (moments == nullptr || moments->count == 0)
          throw UnfrozenMomentsError("normalize: BN test mode requires accumulated moments");
        out.y = scale_forward(frozen_norm_forward(x, *moments), *scale);
      }
      break;
    }
    case NormKind::BN_PLUS: {
      out.y = scale_forward(batch_norm_forward(x).y, *scale);
      break;
    }
    case NormKind::IN: {
      out.y = scale_forward(instance_norm_forward(x), *scale);
      break;
    }
    case NormKind::NONE: {
      out.y = scale_forward(x, *scale);
      break;
    }
  }
  return out;
}

}  // namespace unirep

#endif  // UNIREP_NORMALIZATION_HPP_
