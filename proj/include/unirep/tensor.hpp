#ifndef UNIREP_TENSOR_HPP_
#define UNIREP_TENSOR_HPP_

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "unirep/error.hpp"

namespace unirep {

/// Dense 4-way array indexed (v, u, c, t) = (row, col, channel, instance).
/// Storage is contiguous and instance-major: t is the slowest index and c the
/// fastest, so one instance's pixels form one contiguous block.
template <typename T>
class Tensor4T {
public:
  using value_type = T;

  Tensor4T() = default;

  Tensor4T(std::size_t h, std::size_t w, std::size_t c, std::size_t t)
      : h_(h), w_(w), c_(c), t_(t), data_(h * w * c * t, T(0)) {
    if (h < 1 || w < 1 || c < 1 || t < 1)
      throw DimensionError("Tensor4: all dims must be >= 1, got " + dims_str());
  }

  Tensor4T(std::size_t h, std::size_t w, std::size_t c, std::size_t t,
           std::vector<T> values)
      : h_(h), w_(w), c_(c), t_(t), data_(std::move(values)) {
    if (h < 1 || w < 1 || c < 1 || t < 1)
      throw DimensionError("Tensor4: all dims must be >= 1, got " + dims_str());
    if (data_.size() != h * w * c * t)
      throw DimensionError("Tensor4: data length " + std::to_string(data_.size()) +
                           " does not equal H*W*C*T = " + std::to_string(h * w * c * t));
  }

  std::size_t rows() const { return h_; }
  std::size_t cols() const { return w_; }
  std::size_t channels() const { return c_; }
  std::size_t batch() const { return t_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  bool same_dims(const Tensor4T& o) const {
    return h_ == o.h_ && w_ == o.w_ && c_ == o.c_ && t_ == o.t_;
  }

  std::string dims_str() const {
    return std::to_string(h_) + "x" + std::to_string(w_) + "x" +
           std::to_string(c_) + "x" + std::to_string(t_);
  }

  std::size_t index(std::size_t v, std::size_t u, std::size_t c, std::size_t t) const {
    return ((t * h_ + v) * w_ + u) * c_ + c;
  }

  T& at(std::size_t v, std::size_t u, std::size_t c, std::size_t t) {
    return data_[index(v, u, c, t)];
  }
  const T& at(std::size_t v, std::size_t u, std::size_t c, std::size_t t) const {
    return data_[index(v, u, c, t)];
  }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }
  std::vector<T>& values() { return data_; }
  const std::vector<T>& values() const { return data_; }

  /// Pointer to instance t's contiguous H*W*C block.
  T* instance(std::size_t t) { return data_.data() + t * h_ * w_ * c_; }
  const T* instance(std::size_t t) const { return data_.data() + t * h_ * w_ * c_; }
  std::size_t instance_size() const { return h_ * w_ * c_; }

  void fill(T v) { std::fill(data_.begin(), data_.end(), v); }

  Tensor4T zeros_like() const { return Tensor4T(h_, w_, c_, t_); }

  bool all_finite() const {
    for (const T& v : data_)
      if (!std::isfinite(static_cast<double>(v))) return false;
    return true;
  }

  template <typename U>
  Tensor4T<U> cast() const {
    Tensor4T<U> out(h_, w_, c_, t_);
    for (std::size_t i = 0; i < data_.size(); ++i)
      out.data()[i] = static_cast<U>(data_[i]);
    return out;
  }

  bool operator==(const Tensor4T& o) const {
    return same_dims(o) && data_ == o.data_;
  }

private:
  std::size_t h_ = 0, w_ = 0, c_ = 0, t_ = 0;
  std::vector<T> data_;
};

using Tensor4 = Tensor4T<float>;
using Tensor4d = Tensor4T<double>;

/// A value tensor together with a gradient of identical dims.
template <typename T>
struct GradPairT {
  Tensor4T<T> value;
  Tensor4T<T> grad;

  explicit GradPairT(Tensor4T<T> v) : value(std::move(v)), grad(value.zeros_like()) {}
  GradPairT(Tensor4T<T> v, Tensor4T<T> g) : value(std::move(v)), grad(std::move(g)) {
    if (!value.same_dims(grad))
      throw DimensionError("GradPair: grad dims " + grad.dims_str() +
                           " differ from value dims " + value.dims_str());
  }
};

using GradPair = GradPairT<float>;

// In debug builds every primitive asserts its outputs stay finite on finite
// input; release builds compile the scan away.
template <typename T>
inline void debug_check_finite(const Tensor4T<T>& x, const char* where) {
#ifndef NDEBUG
  if (!x.all_finite()) throw Error(std::string("non-finite values after ") + where);
#else
  (void)x;
  (void)where;
#endif
}

}  // namespace unirep

#endif  // UNIREP_TENSOR_HPP_
