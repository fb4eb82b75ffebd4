#ifndef UNIREP_OPTIMIZER_HPP_
#define UNIREP_OPTIMIZER_HPP_

#include <cstddef>

#include "unirep/model.hpp"

namespace unirep {

/// Momentum SGD with L2 weight decay:
///   v <- momentum * v + grad + weight_decay * param
///   param <- param - lr * v
/// Weight decay applies to convolution/linear weights only, never to biases
/// or scaling parameters.
struct OptimizerConfig {
  double momentum = 0.9;
  double weight_decay = 1e-4;
};

struct OptimizerState {
  OptimizerConfig config;
  GradBank velocity;  // mirrors the parameter layout, zero-initialized

  static OptimizerState create(const Model& model, const OptimizerConfig& cfg) {
    return OptimizerState{cfg, make_grad_bank(model)};
  }
};

/// Core update on one flat parameter array; shared by every parameter class.
template <typename T>
void sgd_update_array(T* param, const T* grad, T* velocity, std::size_t n,
                      double momentum, double weight_decay, double lr) {
  const T m = static_cast<T>(momentum);
  const T wd = static_cast<T>(weight_decay);
  const T step = static_cast<T>(lr);
  for (std::size_t i = 0; i < n; ++i) {
    velocity[i] = m * velocity[i] + grad[i] + wd * param[i];
    param[i] -= step * velocity[i];
  }
}

/// Applies one descent step to every trainable parameter of the model.
inline void sgd_step(Model& model, const GradBank& grads, OptimizerState& state,
                     double lr) {
  if (grads.entries.size() != model.bank.entries.size())
    throw DimensionError("sgd_step: gradient bank is not aligned with the model");
  for (std::size_t i = 0; i < model.bank.entries.size(); ++i) {
    auto& entry = model.bank.entries[i];
    if (!entry.value.same_dims(grads.entries[i]))
      throw DimensionError("sgd_step: gradient dims " + grads.entries[i].dims_str() +
                           " vs parameter dims " + entry.value.dims_str() + " for '" +
                           entry.name + "'");
    const double wd = entry.kind == ParamKind::Weight ? state.config.weight_decay : 0.0;
    sgd_update_array(entry.value.data(), grads.entries[i].data(),
                     state.velocity.entries[i].data(), entry.value.size(),
                     state.config.momentum, wd, lr);
  }
  for (std::size_t s = 0; s < model.sites.size(); ++s) {
    auto apply = [&](ScaleParams& p, const ScaleGradT<float>& g, ScaleGradT<float>& v) {
      sgd_update_array(p.s.data(), g.ds.data(), v.ds.data(), p.s.size(),
                       state.config.momentum, 0.0, lr);
      sgd_update_array(p.b.data(), g.db.data(), v.db.data(), p.b.size(),
                       state.config.momentum, 0.0, lr);
    };
    auto& coll = model.sites[s];
    for (std::size_t d = 0; d < coll.domain_scales.size(); ++d)
      apply(coll.domain_scales[d], grads.sites[s].per_domain[d],
            state.velocity.sites[s].per_domain[d]);
    if (coll.shared_scale)
      apply(*coll.shared_scale, *grads.sites[s].shared, *state.velocity.sites[s].shared);
  }
}

}  // namespace unirep

#endif  // UNIREP_OPTIMIZER_HPP_
