#ifndef UNIREP_LAYERS_HPP_
#define UNIREP_LAYERS_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "unirep/tensor.hpp"

namespace unirep {

// Differentiable primitives. All are pure functions over immutable inputs;
// each backward is hand-derived and checked against central finite
// differences in the test suite.

template <typename T>
struct ConvGradsT {
  Tensor4T<T> dx;
  Tensor4T<T> dweights;
  Tensor4T<T> dbias;
};

namespace detail {

template <typename T>
inline void check_conv_shapes(const Tensor4T<T>& x, const Tensor4T<T>& weights,
                              const Tensor4T<T>& bias, int stride, int pad,
                              std::size_t& out_h, std::size_t& out_w) {
  if (weights.channels() != x.channels())
    throw DimensionError("conv2d: channel axis mismatch, filter Cin=" +
                         std::to_string(weights.channels()) + " vs input C=" +
                         std::to_string(x.channels()));
  if (bias.size() != weights.batch())
    throw DimensionError("conv2d: bias axis length " + std::to_string(bias.size()) +
                         " vs Cout=" + std::to_string(weights.batch()));
  if (stride < 1) throw ConfigError("conv2d: stride must be positive");
  if (pad < 0) throw ConfigError("conv2d: pad must be non-negative");
  const long ih = static_cast<long>(x.rows()) + 2 * pad - static_cast<long>(weights.rows());
  const long iw = static_cast<long>(x.cols()) + 2 * pad - static_cast<long>(weights.cols());
  if (ih < 0 || iw < 0 || ih % stride != 0 || iw % stride != 0)
    throw ConfigError("conv2d: output size (H+2*pad-K)/stride+1 is not integral for " +
                      x.dims_str() + " with K=" + std::to_string(weights.rows()) +
                      " stride=" + std::to_string(stride) + " pad=" + std::to_string(pad));
  out_h = static_cast<std::size_t>(ih / stride) + 1;
  out_w = static_cast<std::size_t>(iw / stride) + 1;
}

// Repacks filters so the output channel is the fastest index; the inner
// loops then accumulate whole Cout rows with unit stride.
template <typename T>
inline std::vector<T> repack_cout_fastest(const Tensor4T<T>& w) {
  const std::size_t kh = w.rows(), kw = w.cols(), ci = w.channels(), co = w.batch();
  std::vector<T> out(w.size());
  for (std::size_t o = 0; o < co; ++o)
    for (std::size_t kv = 0; kv < kh; ++kv)
      for (std::size_t ku = 0; ku < kw; ++ku)
        for (std::size_t i = 0; i < ci; ++i)
          out[((kv * kw + ku) * ci + i) * co + o] = w.at(kv, ku, i, o);
  return out;
}

}  // namespace detail

/// 2-D cross-correlation over a batch. weights are (K, K, Cin, Cout), bias has
/// length Cout. Output is ((H+2p-K)/s+1, (W+2p-K)/s+1, Cout, T).
template <typename T>
Tensor4T<T> conv2d_forward(const Tensor4T<T>& x, const Tensor4T<T>& weights,
                           const Tensor4T<T>& bias, int stride, int pad) {
  std::size_t oh = 0, ow = 0;
  detail::check_conv_shapes(x, weights, bias, stride, pad, oh, ow);
  const std::size_t kh = weights.rows(), kw = weights.cols();
  const std::size_t cin = x.channels(), cout = weights.batch();
  const std::size_t h = x.rows(), w = x.cols(), n = x.batch();

  const std::vector<T> wk = detail::repack_cout_fastest(weights);
  Tensor4T<T> y(oh, ow, cout, n);

  for (std::size_t t = 0; t < n; ++t) {
    const T* xt = x.instance(t);
    T* yt = y.instance(t);
    for (std::size_t vo = 0; vo < oh; ++vo) {
      for (std::size_t uo = 0; uo < ow; ++uo) {
        T* yrow = yt + (vo * ow + uo) * cout;
        for (std::size_t o = 0; o < cout; ++o) yrow[o] = bias.data()[o];
        for (std::size_t kv = 0; kv < kh; ++kv) {
          const long vi = static_cast<long>(vo) * stride - pad + static_cast<long>(kv);
          if (vi < 0 || vi >= static_cast<long>(h)) continue;
          for (std::size_t ku = 0; ku < kw; ++ku) {
            const long ui = static_cast<long>(uo) * stride - pad + static_cast<long>(ku);
            if (ui < 0 || ui >= static_cast<long>(w)) continue;
            const T* xrow = xt + (static_cast<std::size_t>(vi) * w +
                                  static_cast<std::size_t>(ui)) * cin;
            const T* wrow = wk.data() + (kv * kw + ku) * cin * cout;
            for (std::size_t i = 0; i < cin; ++i) {
              const T xv = xrow[i];
              const T* wr = wrow + i * cout;
              for (std::size_t o = 0; o < cout; ++o) yrow[o] += xv * wr[o];
            }
          }
        }
      }
    }
  }
  debug_check_finite(y, "conv2d_forward");
  return y;
}

/// Gradients of conv2d w.r.t. input, weights and bias given the upstream
/// gradient on the output.
template <typename T>
ConvGradsT<T> conv2d_backward(const Tensor4T<T>& x, const Tensor4T<T>& weights,
                              const Tensor4T<T>& bias, int stride, int pad,
                              const Tensor4T<T>& upstream) {
  std::size_t oh = 0, ow = 0;
  detail::check_conv_shapes(x, weights, bias, stride, pad, oh, ow);
  if (upstream.rows() != oh || upstream.cols() != ow ||
      upstream.channels() != weights.batch() || upstream.batch() != x.batch())
    throw DimensionError("conv2d_backward: upstream dims " + upstream.dims_str() +
                         " do not match output dims");
  const std::size_t kh = weights.rows(), kw = weights.cols();
  const std::size_t cin = x.channels(), cout = weights.batch();
  const std::size_t h = x.rows(), w = x.cols(), n = x.batch();

  ConvGradsT<T> g{x.zeros_like(), weights.zeros_like(), bias.zeros_like()};
  std::vector<T> dwk(weights.size(), T(0));  // cout-fastest accumulator

  for (std::size_t t = 0; t < n; ++t) {
    const T* xt = x.instance(t);
    const T* gt = upstream.instance(t);
    T* dxt = g.dx.instance(t);
    for (std::size_t vo = 0; vo < oh; ++vo) {
      for (std::size_t uo = 0; uo < ow; ++uo) {
        const T* grow = gt + (vo * ow + uo) * cout;
        for (std::size_t o = 0; o < cout; ++o) g.dbias.data()[o] += grow[o];
        for (std::size_t kv = 0; kv < kh; ++kv) {
          const long vi = static_cast<long>(vo) * stride - pad + static_cast<long>(kv);
          if (vi < 0 || vi >= static_cast<long>(h)) continue;
          for (std::size_t ku = 0; ku < kw; ++ku) {
            const long ui = static_cast<long>(uo) * stride - pad + static_cast<long>(ku);
            if (ui < 0 || ui >= static_cast<long>(w)) continue;
            const std::size_t xoff = (static_cast<std::size_t>(vi) * w +
                                      static_cast<std::size_t>(ui)) * cin;
            const T* xrow = xt + xoff;
            T* dxrow = dxt + xoff;
            T* dwrow = dwk.data() + (kv * kw + ku) * cin * cout;
            for (std::size_t o = 0; o < cout; ++o) {
              const T gv = grow[o];
              const T* wrow = weights.data() + (o * kh + kv) * kw * cin + ku * cin;
              for (std::size_t i = 0; i < cin; ++i) dxrow[i] += gv * wrow[i];
            }
            for (std::size_t i = 0; i < cin; ++i) {
              const T xv = xrow[i];
              T* dwr = dwrow + i * cout;
              for (std::size_t o = 0; o < cout; ++o) dwr[o] += xv * grow[o];
            }
          }
        }
      }
    }
  }
  for (std::size_t o = 0; o < cout; ++o)
    for (std::size_t kv = 0; kv < kh; ++kv)
      for (std::size_t ku = 0; ku < kw; ++ku)
        for (std::size_t i = 0; i < cin; ++i)
          g.dweights.at(kv, ku, i, o) = dwk[((kv * kw + ku) * cin + i) * cout + o];
  debug_check_finite(g.dx, "conv2d_backward");
  return g;
}

/// Affine map per batch instance. The input is flattened per instance to
/// length F = H*W*C; weights are (1, 1, F, K) so that y_k = sum_f W[f,k] x_f.
/// Output is (1, 1, K, T).
template <typename T>
Tensor4T<T> linear_forward(const Tensor4T<T>& x, const Tensor4T<T>& weights,
                           const Tensor4T<T>& bias) {
  const std::size_t f = x.instance_size();
  const std::size_t k = weights.batch();
  if (weights.channels() != f || weights.rows() != 1 || weights.cols() != 1)
    throw DimensionError("linear: weight input axis " + std::to_string(weights.channels()) +
                         " vs flattened feature length " + std::to_string(f));
  if (bias.size() != k)
    throw DimensionError("linear: bias axis length " + std::to_string(bias.size()) +
                         " vs K=" + std::to_string(k));
  Tensor4T<T> y(1, 1, k, x.batch());
  for (std::size_t t = 0; t < x.batch(); ++t) {
    const T* xt = x.instance(t);
    T* yt = y.instance(t);
    for (std::size_t j = 0; j < k; ++j) {
      const T* wrow = weights.data() + j * f;
      T acc = bias.data()[j];
      for (std::size_t i = 0; i < f; ++i) acc += wrow[i] * xt[i];
      yt[j] = acc;
    }
  }
  debug_check_finite(y, "linear_forward");
  return y;
}

template <typename T>
ConvGradsT<T> linear_backward(const Tensor4T<T>& x, const Tensor4T<T>& weights,
                              const Tensor4T<T>& bias, const Tensor4T<T>& upstream) {
  const std::size_t f = x.instance_size();
  const std::size_t k = weights.batch();
  if (weights.channels() != f)
    throw DimensionError("linear_backward: weight input axis mismatch");
  if (upstream.channels() != k || upstream.batch() != x.batch())
    throw DimensionError("linear_backward: upstream dims " + upstream.dims_str());
  (void)bias;
  ConvGradsT<T> g{x.zeros_like(), weights.zeros_like(), Tensor4T<T>(1, 1, k, 1)};
  for (std::size_t t = 0; t < x.batch(); ++t) {
    const T* xt = x.instance(t);
    const T* gt = upstream.instance(t);
    T* dxt = g.dx.instance(t);
    for (std::size_t j = 0; j < k; ++j) {
      const T gv = gt[j];
      g.dbias.data()[j] += gv;
      const T* wrow = weights.data() + j * f;
      T* dwrow = g.dweights.data() + j * f;
      for (std::size_t i = 0; i < f; ++i) {
        dwrow[i] += gv * xt[i];
        dxt[i] += gv * wrow[i];
      }
    }
  }
  return g;
}

/// Elementwise max(x, 0).
template <typename T>
Tensor4T<T> relu_forward(const Tensor4T<T>& x) {
  Tensor4T<T> y = x;
  for (T& v : y.values()) v = v > T(0) ? v : T(0);
  return y;
}

/// Pass-through where x > 0, zero elsewhere. The subgradient at x == 0 is 0.
template <typename T>
Tensor4T<T> relu_backward(const Tensor4T<T>& x, const Tensor4T<T>& upstream) {
  if (!x.same_dims(upstream))
    throw DimensionError("relu_backward: upstream dims " + upstream.dims_str() +
                         " vs input dims " + x.dims_str());
  Tensor4T<T> dx = x.zeros_like();
  for (std::size_t i = 0; i < x.size(); ++i)
    dx.data()[i] = x.data()[i] > T(0) ? upstream.data()[i] : T(0);
  return dx;
}

/// Per-channel, per-instance spatial mean; output is (1, 1, C, T).
template <typename T>
Tensor4T<T> global_avg_pool_forward(const Tensor4T<T>& x) {
  const std::size_t c = x.channels(), n = x.batch();
  const T inv = T(1) / static_cast<T>(x.rows() * x.cols());
  Tensor4T<T> y(1, 1, c, n);
  for (std::size_t t = 0; t < n; ++t) {
    const T* xt = x.instance(t);
    T* yt = y.instance(t);
    for (std::size_t p = 0; p < x.rows() * x.cols(); ++p)
      for (std::size_t i = 0; i < c; ++i) yt[i] += xt[p * c + i];
    for (std::size_t i = 0; i < c; ++i) yt[i] *= inv;
  }
  return y;
}

/// Distributes the upstream gradient uniformly over the spatial positions.
template <typename T>
Tensor4T<T> global_avg_pool_backward(const Tensor4T<T>& x, const Tensor4T<T>& upstream) {
  if (upstream.channels() != x.channels() || upstream.batch() != x.batch() ||
      upstream.rows() != 1 || upstream.cols() != 1)
    throw DimensionError("global_avg_pool_backward: upstream dims " + upstream.dims_str());
  const std::size_t c = x.channels();
  const T inv = T(1) / static_cast<T>(x.rows() * x.cols());
  Tensor4T<T> dx = x.zeros_like();
  for (std::size_t t = 0; t < x.batch(); ++t) {
    const T* gt = upstream.instance(t);
    T* dxt = dx.instance(t);
    for (std::size_t p = 0; p < x.rows() * x.cols(); ++p)
      for (std::size_t i = 0; i < c; ++i) dxt[p * c + i] = gt[i] * inv;
  }
  return dx;
}

template <typename T>
struct SoftmaxLossT {
  T loss;            // mean over the batch
  Tensor4T<T> grad;  // d loss / d logits, already divided by T
  std::vector<T> probs;  // row-major (t, k) softmax, kept for evaluation
};

/// Mean cross-entropy over the batch from raw logits (1, 1, K, T), with
/// max-subtracted softmax so huge margins cannot overflow.
template <typename T>
SoftmaxLossT<T> softmax_cross_entropy(const Tensor4T<T>& logits,
                                      const std::vector<int>& labels) {
  const std::size_t k = logits.channels(), n = logits.batch();
  if (logits.rows() != 1 || logits.cols() != 1)
    throw DimensionError("softmax_cross_entropy: logits must be 1x1xKxT, got " +
                         logits.dims_str());
  if (labels.size() != n)
    throw DimensionError("softmax_cross_entropy: label count " +
                         std::to_string(labels.size()) + " vs batch " + std::to_string(n));
  SoftmaxLossT<T> out{T(0), logits.zeros_like(), std::vector<T>(k * n)};
  const T invn = T(1) / static_cast<T>(n);
  double loss_acc = 0.0;
  for (std::size_t t = 0; t < n; ++t) {
    if (labels[t] < 0 || static_cast<std::size_t>(labels[t]) >= k)
      throw LabelError("softmax_cross_entropy: label " + std::to_string(labels[t]) +
                       " out of [0," + std::to_string(k) + ") at batch index " +
                       std::to_string(t));
    const T* lt = logits.instance(t);
    T mx = lt[0];
    for (std::size_t j = 1; j < k; ++j) mx = std::max(mx, lt[j]);
    double denom = 0.0;
    for (std::size_t j = 0; j < k; ++j)
      denom += std::exp(static_cast<double>(lt[j] - mx));
    const double log_denom = std::log(denom);
    T* gt = out.grad.instance(t);
    for (std::size_t j = 0; j < k; ++j) {
      const double p = std::exp(static_cast<double>(lt[j] - mx) - log_denom);
      out.probs[t * k + j] = static_cast<T>(p);
      gt[j] = static_cast<T>(p) * invn;
    }
    const std::size_t y = static_cast<std::size_t>(labels[t]);
    gt[y] -= invn;
    loss_acc += log_denom - static_cast<double>(lt[y] - mx);
  }
  out.loss = static_cast<T>(loss_acc * invn);
  return out;
}

}  // namespace unirep

#endif  // UNIREP_LAYERS_HPP_
