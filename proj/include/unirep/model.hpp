#ifndef UNIREP_MODEL_HPP_
#define UNIREP_MODEL_HPP_

#include <cstdint>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "unirep/blueprint.hpp"
#include "unirep/layers.hpp"
#include "unirep/normalization.hpp"
#include "unirep/rng.hpp"
#include "unirep/tensor.hpp"

namespace unirep {

enum class ParamKind { Weight, Bias };

template <typename T>
struct ParamEntryT {
  std::string name;
  ParamKind kind = ParamKind::Weight;
  int domain = 0;  // 0 = shared across domains, else the owning domain id
  Tensor4T<T> value;
};

template <typename T>
struct ParamBankT {
  std::vector<ParamEntryT<T>> entries;

  std::size_t scalar_count() const {
    std::size_t n = 0;
    for (const auto& e : entries) n += e.value.size();
    return n;
  }
};

using ParamBank = ParamBankT<float>;

/// Resolves one conv/linear slot to its weight/bias entries, either a single
/// shared pair or one pair per domain.
struct SlotBinding {
  bool shared = false;
  std::vector<int> w_ids;  // size 1 if shared, else D
  std::vector<int> b_ids;

  int w(std::size_t d) const { return shared ? w_ids[0] : w_ids[d - 1]; }
  int b(std::size_t d) const { return shared ? b_ids[0] : b_ids[d - 1]; }
};

struct ConvSlotSpec {
  std::string name;
  std::size_t kernel = 3;
  std::size_t in_channels = 0;
  std::size_t out_channels = 0;  // classifier: K_d, resolved per domain
  int stride = 1;
  int pad = 1;
  bool is_linear = false;
  std::size_t stage = 0;  // 0 = stem, 1..S = stages, S+1 = classifier
};

struct UnitPlan {
  std::size_t norm1_site = 0, norm2_site = 0;
  std::size_t conv1_slot = 0, conv2_slot = 0;
  int proj_slot = -1;  // -1 = identity shortcut
};

struct SitePlanEntry {
  std::string name;
  std::size_t channels = 0;
};

struct ModelPlan {
  std::size_t stem_slot = 0;
  std::vector<std::vector<UnitPlan>> stages;
  std::size_t head_site = 0;
  std::size_t classifier_slot = 0;
  std::vector<ConvSlotSpec> slots;
  std::vector<SitePlanEntry> sites;
};

/// A runnable multi-domain network: the layer plan, the parameter bank with
/// its sharing-derived binding, and the per-site domain parameter
/// collections. Immutable during forward/backward; updates happen only
/// between steps under exclusive access.
template <typename T>
struct ModelT {
  Blueprint blueprint;
  SharingConfig sharing;
  ModelPlan plan;
  ParamBankT<T> bank;
  std::vector<SlotBinding> binding;                 // aligned with plan.slots
  std::vector<DomainParamCollectionsT<T>> sites;    // aligned with plan.sites
  std::vector<std::vector<int>> class_pairing;      // [d-1][k] -> classifier column
  std::uint64_t init_seed = 0;

  std::size_t num_domains() const { return blueprint.class_counts.size(); }

  template <typename U>
  ModelT<U> cast() const {
    ModelT<U> out;
    out.blueprint = blueprint;
    out.sharing = sharing;
    out.plan = plan;
    out.binding = binding;
    out.class_pairing = class_pairing;
    out.init_seed = init_seed;
    out.bank.entries.reserve(bank.entries.size());
    for (const auto& e : bank.entries)
      out.bank.entries.push_back({e.name, e.kind, e.domain, e.value.template cast<U>()});
    out.sites.reserve(sites.size());
    for (const auto& s : sites) {
      DomainParamCollectionsT<U> c;
      c.scale_scope = s.scale_scope;
      c.moment_scope = s.moment_scope;
      for (const auto& sp : s.domain_scales) {
        ScaleParamsT<U> q;
        q.s.assign(sp.s.begin(), sp.s.end());
        q.b.assign(sp.b.begin(), sp.b.end());
        c.domain_scales.push_back(std::move(q));
      }
      if (s.shared_scale) {
        ScaleParamsT<U> q;
        q.s.assign(s.shared_scale->s.begin(), s.shared_scale->s.end());
        q.b.assign(s.shared_scale->b.begin(), s.shared_scale->b.end());
        c.shared_scale = std::move(q);
      }
      for (const auto& mp : s.domain_moments) {
        MomentParamsT<U> q;
        q.mu.assign(mp.mu.begin(), mp.mu.end());
        q.sigma2.assign(mp.sigma2.begin(), mp.sigma2.end());
        q.count = mp.count;
        c.domain_moments.push_back(std::move(q));
      }
      if (s.shared_moments) {
        MomentParamsT<U> q;
        q.mu.assign(s.shared_moments->mu.begin(), s.shared_moments->mu.end());
        q.sigma2.assign(s.shared_moments->sigma2.begin(), s.shared_moments->sigma2.end());
        q.count = s.shared_moments->count;
        c.shared_moments = std::move(q);
      }
      out.sites.push_back(std::move(c));
    }
    return out;
  }
};

using Model = ModelT<float>;

namespace detail {

inline bool slot_is_shared(const ConvSlotSpec& spec, const SharingConfig& sharing,
                           std::size_t num_stages) {
  const bool is_classifier = spec.stage == num_stages + 1;
  switch (sharing.mode) {
    case SharingMode::NoSharing:
      return false;
    case SharingMode::FullSharing:
      return true;
    case SharingMode::DeepSharing:
      return !is_classifier;
    case SharingMode::Partial: {
      if (is_classifier) return false;
      const std::size_t stage = spec.stage == 0 ? 1 : spec.stage;  // stem follows stage 1
      return stage >= sharing.partial_first && stage <= sharing.partial_last;
    }
  }
  return false;
}

template <typename T>
Tensor4T<T> he_init(std::size_t kh, std::size_t kw, std::size_t cin, std::size_t cout,
                    Rng& rng) {
  Tensor4T<T> w(kh, kw, cin, cout);
  const double std_dev = std::sqrt(2.0 / static_cast<double>(kh * kw * cin));
  for (T& v : w.values()) v = static_cast<T>(rng.gaussian() * std_dev);
  return w;
}

}  // namespace detail

/// Instantiates a Blueprint under a SharingConfig: registers every weight
/// slot (shared or per domain), creates per-site collections per the
/// normalization scopes, seeds He-initialized weights, and records the
/// class-pairing permutations for full sharing.
template <typename T>
ModelT<T> apply_sharing(const Blueprint& blueprint, const SharingConfig& sharing,
                        std::size_t num_domains, std::uint64_t init_seed) {
  blueprint.validate();
  sharing.validate(blueprint);
  if (num_domains != blueprint.num_domains())
    throw ConfigError("apply_sharing: domain count " + std::to_string(num_domains) +
                      " vs blueprint class counts " +
                      std::to_string(blueprint.num_domains()));

  ModelT<T> model;
  model.blueprint = blueprint;
  model.sharing = sharing;
  model.init_seed = init_seed;
  ModelPlan& plan = model.plan;

  const std::size_t num_stages = blueprint.stages.size();

  auto add_site = [&](const std::string& name, std::size_t channels) {
    plan.sites.push_back({name, channels});
    model.sites.push_back(
        DomainParamCollectionsT<T>::create(blueprint.norm, num_domains, channels));
    return plan.sites.size() - 1;
  };

  auto add_slot = [&](ConvSlotSpec spec) {
    plan.slots.push_back(std::move(spec));
    return plan.slots.size() - 1;
  };

  // Stem: 3x3, stride 1, pad 1.
  plan.stem_slot = add_slot({"stem", 3, blueprint.input_channels,
                             blueprint.stages[0].filters, 1, 1, false, 0});

  std::size_t in_ch = blueprint.stages[0].filters;
  for (std::size_t s = 0; s < num_stages; ++s) {
    const std::size_t out_ch = blueprint.stages[s].filters;
    std::vector<UnitPlan> units;
    for (std::size_t u = 0; u < blueprint.stages[s].units; ++u) {
      const std::string base = "s" + std::to_string(s + 1) + "u" + std::to_string(u + 1);
      UnitPlan unit;
      const bool downsample = (s > 0 && u == 0);
      const bool channel_change = in_ch != out_ch;
      unit.norm1_site = add_site(base + "/norm1", in_ch);
      // Downsampling units use exact-shape 2x2 stride-2 convolutions; all
      // others are 3x3 pad-1.
      if (downsample)
        unit.conv1_slot = add_slot({base + "/conv1", 2, in_ch, out_ch, 2, 0, false, s + 1});
      else
        unit.conv1_slot = add_slot({base + "/conv1", 3, in_ch, out_ch, 1, 1, false, s + 1});
      unit.norm2_site = add_site(base + "/norm2", out_ch);
      unit.conv2_slot = add_slot({base + "/conv2", 3, out_ch, out_ch, 1, 1, false, s + 1});
      if (downsample)
        unit.proj_slot = static_cast<int>(
            add_slot({base + "/proj", 2, in_ch, out_ch, 2, 0, false, s + 1}));
      else if (channel_change)
        unit.proj_slot = static_cast<int>(
            add_slot({base + "/proj", 1, in_ch, out_ch, 1, 0, false, s + 1}));
      units.push_back(unit);
      in_ch = out_ch;
    }
    plan.stages.push_back(std::move(units));
  }
  plan.head_site = add_site("head/norm", in_ch);
  plan.classifier_slot =
      add_slot({"head/fc", 1, in_ch, 0, 1, 0, true, num_stages + 1});

  // Register bank entries per slot under the sharing rule.
  model.binding.resize(plan.slots.size());
  for (std::size_t slot = 0; slot < plan.slots.size(); ++slot) {
    const ConvSlotSpec& spec = plan.slots[slot];
    SlotBinding& bind = model.binding[slot];
    bind.shared = detail::slot_is_shared(spec, sharing, num_stages);
    const std::size_t copies = bind.shared ? 1 : num_domains;
    for (std::size_t i = 0; i < copies; ++i) {
      const int domain = bind.shared ? 0 : static_cast<int>(i + 1);
      const std::size_t out_ch =
          spec.is_linear ? blueprint.class_counts[bind.shared ? 0 : i] : spec.out_channels;
      const std::string suffix = bind.shared ? "" : "/d" + std::to_string(domain);
      Rng rng(derive_seed(init_seed, rng_tag::kWeightInit, slot, i));
      Tensor4T<T> w =
          spec.is_linear
              ? detail::he_init<T>(1, 1, spec.in_channels, out_ch, rng)
              : detail::he_init<T>(spec.kernel, spec.kernel, spec.in_channels, out_ch, rng);
      bind.w_ids.push_back(static_cast<int>(model.bank.entries.size()));
      model.bank.entries.push_back(
          {spec.name + "/w" + suffix, ParamKind::Weight, domain, std::move(w)});
      bind.b_ids.push_back(static_cast<int>(model.bank.entries.size()));
      model.bank.entries.push_back(
          {spec.name + "/b" + suffix, ParamKind::Bias, domain, Tensor4T<T>(1, 1, out_ch, 1)});
    }
  }

  // Class pairing: identity for domain 1, a seeded permutation elsewhere
  // under full sharing, identity otherwise.
  for (std::size_t d = 1; d <= num_domains; ++d) {
    std::vector<int> perm(blueprint.class_counts[d - 1]);
    std::iota(perm.begin(), perm.end(), 0);
    if (sharing.mode == SharingMode::FullSharing && d > 1) {
      Rng rng(derive_seed(init_seed, rng_tag::kClassPairing, d));
      for (std::size_t i = perm.size(); i > 1; --i)
        std::swap(perm[i - 1], perm[rng.uniform_int(i)]);
    }
    model.class_pairing.push_back(std::move(perm));
  }
  return model;
}

// ---------------------------------------------------------------------------
// Forward / backward
// ---------------------------------------------------------------------------

enum class RunMode { Train, TestFrozen, TestOnTheFly };

template <typename T>
struct SiteCtxT {
  Tensor4T<T> norm_in;    // input of the normalization
  Tensor4T<T> normed;     // normalized output, input of the scaling layer
  Tensor4T<T> scale_out;  // scaling output, input of the relu
  std::optional<MomentParamsT<T>> batch_moments;
  NormKind applied = NormKind::NONE;
};

template <typename T>
struct ModelTapeT {
  bool valid = false;
  std::size_t domain = 0;
  RunMode mode = RunMode::Train;
  std::vector<Tensor4T<T>> slot_inputs;  // aligned with plan.slots
  std::vector<SiteCtxT<T>> site_ctx;     // aligned with plan.sites
  Tensor4T<T> pool_in;                   // head relu output
  Tensor4T<T> pooled;                    // classifier input
};

template <typename T>
struct ScaleGradT {
  std::vector<T> ds, db;
  explicit ScaleGradT(std::size_t channels = 0)
      : ds(channels, T(0)), db(channels, T(0)) {}
};

template <typename T>
struct SiteGradsT {
  std::vector<ScaleGradT<T>> per_domain;
  std::optional<ScaleGradT<T>> shared;
};

/// Gradients aligned with the parameter bank and the per-site collections.
/// Entries not touched by a batch (other domains' parameters) stay exactly
/// zero.
template <typename T>
struct GradBankT {
  std::vector<Tensor4T<T>> entries;
  std::vector<SiteGradsT<T>> sites;

  void axpy(T a, const GradBankT& other) {
    for (std::size_t i = 0; i < entries.size(); ++i)
      for (std::size_t j = 0; j < entries[i].size(); ++j)
        entries[i].data()[j] += a * other.entries[i].data()[j];
    for (std::size_t s = 0; s < sites.size(); ++s) {
      auto acc = [a](ScaleGradT<T>& dst, const ScaleGradT<T>& src) {
        for (std::size_t j = 0; j < dst.ds.size(); ++j) {
          dst.ds[j] += a * src.ds[j];
          dst.db[j] += a * src.db[j];
        }
      };
      for (std::size_t d = 0; d < sites[s].per_domain.size(); ++d)
        acc(sites[s].per_domain[d], other.sites[s].per_domain[d]);
      if (sites[s].shared) acc(*sites[s].shared, *other.sites[s].shared);
    }
  }
};

using GradBank = GradBankT<float>;

template <typename T>
GradBankT<T> make_grad_bank(const ModelT<T>& model) {
  GradBankT<T> g;
  g.entries.reserve(model.bank.entries.size());
  for (const auto& e : model.bank.entries) g.entries.push_back(e.value.zeros_like());
  g.sites.resize(model.sites.size());
  for (std::size_t s = 0; s < model.sites.size(); ++s) {
    const auto& coll = model.sites[s];
    if (coll.scale_scope == ParamScope::Domain) {
      for (const auto& sp : coll.domain_scales)
        g.sites[s].per_domain.emplace_back(sp.channels());
    } else {
      g.sites[s].shared = ScaleGradT<T>(coll.shared_scale->channels());
    }
  }
  return g;
}

namespace detail {

template <typename T>
Tensor4T<T> site_forward(const ModelT<T>& model, std::size_t site, const Tensor4T<T>& x,
                         std::size_t d, RunMode mode, SiteCtxT<T>& ctx) {
  const NormStrategy& strategy = model.blueprint.norm;
  NormKind kind = strategy.kind;
  if (mode == RunMode::TestOnTheFly && kind == NormKind::BN) kind = NormKind::BN_PLUS;
  const auto& coll = model.sites[site];
  auto [scale, moments] = mux(d, coll);

  ctx.norm_in = x;
  ctx.applied = kind;
  switch (kind) {
    case NormKind::BN: {
      if (mode == RunMode::Train) {
        auto r = batch_norm_forward(x);
        ctx.normed = std::move(r.y);
        ctx.batch_moments = std::move(r.batch_moments);
      } else {
        if (moments == nullptr || moments->count == 0)
          throw UnfrozenMomentsError("forward: BN test mode at site '" +
                                     model.plan.sites[site].name +
                                     "' requires accumulated moments");
        ctx.normed = frozen_norm_forward(x, *moments);
      }
      break;
    }
    case NormKind::BN_PLUS:
      ctx.normed = batch_norm_forward(x).y;
      break;
    case NormKind::IN:
      ctx.normed = instance_norm_forward(x);
      break;
    case NormKind::NONE:
      ctx.normed = x;
      break;
  }
  ctx.scale_out = scale_forward(ctx.normed, *scale);
  return relu_forward(ctx.scale_out);
}

// Backward through norm+scale+relu given the gradient on the relu output;
// accumulates the scale gradients and returns the gradient on the site input.
template <typename T>
Tensor4T<T> site_backward(const ModelT<T>& model, std::size_t site,
                          const SiteCtxT<T>& ctx, std::size_t d,
                          const Tensor4T<T>& upstream, GradBankT<T>& grads) {
  const auto& coll = model.sites[site];
  auto [scale, moments] = mux(d, coll);
  (void)moments;
  const Tensor4T<T> g_scale_out = relu_backward(ctx.scale_out, upstream);
  ScaleGradsT<T> sg = scale_backward(ctx.normed, *scale, g_scale_out);
  ScaleGradT<T>* dst = coll.scale_scope == ParamScope::Domain
                           ? &grads.sites[site].per_domain[d - 1]
                           : &*grads.sites[site].shared;
  for (std::size_t j = 0; j < sg.ds.size(); ++j) {
    dst->ds[j] += sg.ds[j];
    dst->db[j] += sg.db[j];
  }
  switch (ctx.applied) {
    case NormKind::BN:
    case NormKind::BN_PLUS:
      return batch_norm_backward(ctx.norm_in, sg.dx);
    case NormKind::IN:
      return instance_norm_backward(ctx.norm_in, sg.dx);
    case NormKind::NONE:
      return sg.dx;
  }
  return sg.dx;
}

}  // namespace detail

/// Deterministic composition through the layer graph with parameters
/// resolved via the binding and the domain muxer. batch_domains lists the
/// batch's domain tags for the purity check (defaults to pure {d}).
template <typename T>
Tensor4T<T> forward(const ModelT<T>& model, const Tensor4T<T>& x, std::size_t d,
                    RunMode mode, ModelTapeT<T>& tape,
                    const std::vector<int>& batch_domains = {}) {
  if (d < 1 || d > model.num_domains())
    throw DomainIndexError("forward: domain id " + std::to_string(d) + " out of [1," +
                           std::to_string(model.num_domains()) + "]");
  if (x.channels() != model.blueprint.input_channels)
    throw DimensionError("forward: input channel axis " + std::to_string(x.channels()) +
                         " vs blueprint input channels " +
                         std::to_string(model.blueprint.input_channels));
  const NormStrategy& strategy = model.blueprint.norm;
  if (strategy.uses_batch_stats() && batch_domains.size() > 1)
    throw PurityViolationError("forward: batch-statistics normalization requires a pure "
                               "batch, got " + std::to_string(batch_domains.size()) +
                               " domain tags");

  tape = ModelTapeT<T>{};
  tape.valid = true;
  tape.domain = d;
  tape.mode = mode;
  tape.slot_inputs.resize(model.plan.slots.size());
  tape.site_ctx.resize(model.plan.sites.size());

  auto run_conv = [&](std::size_t slot, const Tensor4T<T>& in) {
    const ConvSlotSpec& spec = model.plan.slots[slot];
    const SlotBinding& bind = model.binding[slot];
    tape.slot_inputs[slot] = in;
    const Tensor4T<T>& w = model.bank.entries[bind.w(d)].value;
    const Tensor4T<T>& b = model.bank.entries[bind.b(d)].value;
    if (spec.is_linear) return linear_forward(in, w, b);
    return conv2d_forward(in, w, b, spec.stride, spec.pad);
  };

  Tensor4T<T> cur = run_conv(model.plan.stem_slot, x);
  for (std::size_t s = 0; s < model.plan.stages.size(); ++s) {
    for (const UnitPlan& unit : model.plan.stages[s]) {
      Tensor4T<T> h1 = detail::site_forward(model, unit.norm1_site, cur, d, mode,
                                            tape.site_ctx[unit.norm1_site]);
      Tensor4T<T> mid = run_conv(unit.conv1_slot, h1);
      Tensor4T<T> h2 = detail::site_forward(model, unit.norm2_site, mid, d, mode,
                                            tape.site_ctx[unit.norm2_site]);
      Tensor4T<T> main = run_conv(unit.conv2_slot, h2);
      Tensor4T<T> shortcut =
          unit.proj_slot >= 0 ? run_conv(static_cast<std::size_t>(unit.proj_slot), h1)
                              : cur;
      if (!main.same_dims(shortcut))
        throw DimensionError("forward: residual shapes " + main.dims_str() + " vs " +
                             shortcut.dims_str());
      for (std::size_t i = 0; i < main.size(); ++i)
        main.data()[i] += shortcut.data()[i];
      cur = std::move(main);
    }
  }
  tape.pool_in = detail::site_forward(model, model.plan.head_site, cur, d, mode,
                                      tape.site_ctx[model.plan.head_site]);
  tape.pooled = global_avg_pool_forward(tape.pool_in);
  return run_conv(model.plan.classifier_slot, tape.pooled);
}

/// Forward without keeping state (evaluation paths).
template <typename T>
Tensor4T<T> forward(const ModelT<T>& model, const Tensor4T<T>& x, std::size_t d,
                    RunMode mode, const std::vector<int>& batch_domains = {}) {
  ModelTapeT<T> tape;
  return forward(model, x, d, mode, tape, batch_domains);
}

/// Hand-rolled backpropagation through the layer graph. Produces gradients
/// for the universal weights and for domain d's collections only; every
/// other domain's slots remain exactly zero.
template <typename T>
GradBankT<T> backward(const ModelT<T>& model, const ModelTapeT<T>& tape,
                      const Tensor4T<T>& logit_grad) {
  if (!tape.valid)
    throw LifecycleError("backward: no retained forward state for this model");
  if (tape.mode != RunMode::Train)
    throw LifecycleError("backward: forward pass was not run in train mode");
  const std::size_t d = tape.domain;
  GradBankT<T> grads = make_grad_bank(model);

  auto conv_backward_at = [&](std::size_t slot, const Tensor4T<T>& up) {
    const ConvSlotSpec& spec = model.plan.slots[slot];
    const SlotBinding& bind = model.binding[slot];
    const Tensor4T<T>& w = model.bank.entries[bind.w(d)].value;
    const Tensor4T<T>& b = model.bank.entries[bind.b(d)].value;
    const Tensor4T<T>& in = tape.slot_inputs[slot];
    ConvGradsT<T> g = spec.is_linear
                          ? linear_backward(in, w, b, up)
                          : conv2d_backward(in, w, b, spec.stride, spec.pad, up);
    auto& wacc = grads.entries[bind.w(d)];
    for (std::size_t i = 0; i < wacc.size(); ++i) wacc.data()[i] += g.dweights.data()[i];
    auto& bacc = grads.entries[bind.b(d)];
    for (std::size_t i = 0; i < bacc.size(); ++i) bacc.data()[i] += g.dbias.data()[i];
    return std::move(g.dx);
  };

  Tensor4T<T> g_pooled = conv_backward_at(model.plan.classifier_slot, logit_grad);
  Tensor4T<T> g_pool_in = global_avg_pool_backward(tape.pool_in, g_pooled);
  Tensor4T<T> g = detail::site_backward(model, model.plan.head_site,
                                        tape.site_ctx[model.plan.head_site], d,
                                        g_pool_in, grads);

  for (std::size_t s = model.plan.stages.size(); s-- > 0;) {
    const auto& units = model.plan.stages[s];
    for (std::size_t u = units.size(); u-- > 0;) {
      const UnitPlan& unit = units[u];
      // g is the gradient on the unit output = main + shortcut.
      Tensor4T<T> g_h2 = conv_backward_at(unit.conv2_slot, g);
      Tensor4T<T> g_mid = detail::site_backward(model, unit.norm2_site,
                                                tape.site_ctx[unit.norm2_site], d,
                                                g_h2, grads);
      Tensor4T<T> g_h1 = conv_backward_at(unit.conv1_slot, g_mid);
      if (unit.proj_slot >= 0) {
        Tensor4T<T> g_h1_proj =
            conv_backward_at(static_cast<std::size_t>(unit.proj_slot), g);
        for (std::size_t i = 0; i < g_h1.size(); ++i)
          g_h1.data()[i] += g_h1_proj.data()[i];
      }
      Tensor4T<T> g_in = detail::site_backward(model, unit.norm1_site,
                                               tape.site_ctx[unit.norm1_site], d,
                                               g_h1, grads);
      if (unit.proj_slot < 0)
        for (std::size_t i = 0; i < g_in.size(); ++i) g_in.data()[i] += g.data()[i];
      g = std::move(g_in);
    }
  }
  // g now holds the gradient on the stem output.
  conv_backward_at(model.plan.stem_slot, g);
  return grads;
}

// ---------------------------------------------------------------------------
// Parameter accounting
// ---------------------------------------------------------------------------

struct ParamCounts {
  std::size_t universal = 0;   // scalars in shared bank entries
  std::size_t per_domain = 0;  // scalars in per-domain bank entries
  std::size_t scales = 0;      // trainable scale/bias scalars across all sites
  std::size_t moments = 0;     // accumulated moment scalars (not trainable)

  std::size_t total_trainable() const { return universal + per_domain + scales; }
};

template <typename T>
ParamCounts count_parameters(const ModelT<T>& model) {
  ParamCounts c;
  for (const auto& e : model.bank.entries) {
    if (e.domain == 0)
      c.universal += e.value.size();
    else
      c.per_domain += e.value.size();
  }
  for (const auto& site : model.sites) {
    for (const auto& sp : site.domain_scales) c.scales += sp.s.size() + sp.b.size();
    if (site.shared_scale)
      c.scales += site.shared_scale->s.size() + site.shared_scale->b.size();
    for (const auto& mp : site.domain_moments) c.moments += mp.mu.size() + mp.sigma2.size();
    if (site.shared_moments)
      c.moments += site.shared_moments->mu.size() + site.shared_moments->sigma2.size();
  }
  return c;
}

}  // namespace unirep

#endif  // UNIREP_MODEL_HPP_
