#include "unirep/verification.hpp"

#include "unirep/config.hpp"
#include "unirep/layers.hpp"
#include "unirep/model.hpp"
#include "unirep/normalization.hpp"
#include "unirep/rng.hpp"

namespace unirep {

namespace {

constexpr double kStep = 1e-3;

Tensor4 random_tensor(std::size_t h, std::size_t w, std::size_t c, std::size_t t,
                      std::uint64_t seed, double scale = 1.0) {
  Tensor4 out(h, w, c, t);
  Rng rng(seed);
  for (float& v : out.values()) v = static_cast<float>(rng.gaussian() * scale);
  return out;
}

// Keeps relu inputs away from the kink so finite differences stay valid.
Tensor4 away_from_zero(Tensor4 x, float min_abs) {
  for (float& v : x.values()) {
    if (v >= 0.0f && v < min_abs) v += min_abs;
    if (v < 0.0f && v > -min_abs) v -= min_abs;
  }
  return x;
}

}  // namespace

std::vector<LayerCheckResult> gradcheck_layers(double tol, unsigned threads) {
  std::vector<LayerCheckResult> results;
  auto run = [&](const std::string& name, const std::function<double(const Tensor4d&)>& f,
                 const Tensor4& x, const Tensor4& analytic) {
    results.push_back({name, finite_difference_check(f, x, analytic, kStep, tol, threads)});
  };

  {  // conv2d: input, weight and bias gradients
    const Tensor4 x = random_tensor(5, 5, 3, 2, 11);
    const Tensor4 w = random_tensor(3, 3, 3, 4, 12, 0.5);
    const Tensor4 b = random_tensor(1, 1, 4, 1, 13, 0.2);
    const Tensor4 up = random_tensor(5, 5, 4, 2, 14);
    const ConvGradsT<float> g = conv2d_backward(x, w, b, 1, 1, up);
    const Tensor4d xd = x.cast<double>(), wd = w.cast<double>(), bd = b.cast<double>();
    const Tensor4d upd = up.cast<double>();
    run("conv2d/dx",
        weighted_output([=](const Tensor4d& p) { return conv2d_forward(p, wd, bd, 1, 1); },
                        upd),
        x, g.dx);
    run("conv2d/dw",
        weighted_output([=](const Tensor4d& p) { return conv2d_forward(xd, p, bd, 1, 1); },
                        upd),
        w, g.dweights);
    run("conv2d/db",
        weighted_output([=](const Tensor4d& p) { return conv2d_forward(xd, wd, p, 1, 1); },
                        upd),
        b, g.dbias);
  }
  {  // strided conv
    const Tensor4 x = random_tensor(6, 6, 2, 2, 21);
    const Tensor4 w = random_tensor(2, 2, 2, 3, 22, 0.5);
    const Tensor4 b(1, 1, 3, 1);
    const Tensor4 up = random_tensor(3, 3, 3, 2, 23);
    const ConvGradsT<float> g = conv2d_backward(x, w, b, 2, 0, up);
    const Tensor4d wd = w.cast<double>(), bd = b.cast<double>(), upd = up.cast<double>();
    run("conv2d_s2/dx",
        weighted_output([=](const Tensor4d& p) { return conv2d_forward(p, wd, bd, 2, 0); },
                        upd),
        x, g.dx);
  }
  {  // linear
    const Tensor4 x = random_tensor(2, 2, 3, 2, 31);
    const Tensor4 w = random_tensor(1, 1, 12, 4, 32, 0.5);
    const Tensor4 b = random_tensor(1, 1, 4, 1, 33, 0.2);
    const Tensor4 up = random_tensor(1, 1, 4, 2, 34);
    const ConvGradsT<float> g = linear_backward(x, w, b, up);
    const Tensor4d xd = x.cast<double>(), wd = w.cast<double>(), bd = b.cast<double>();
    const Tensor4d upd = up.cast<double>();
    run("linear/dx",
        weighted_output([=](const Tensor4d& p) { return linear_forward(p, wd, bd); }, upd),
        x, g.dx);
    run("linear/dw",
        weighted_output([=](const Tensor4d& p) { return linear_forward(xd, p, bd); }, upd),
        w, g.dweights);
    run("linear/db",
        weighted_output([=](const Tensor4d& p) { return linear_forward(xd, wd, p); }, upd),
        b, g.dbias);
  }
  {  // relu, input drawn away from the kink
    const Tensor4 x = away_from_zero(random_tensor(4, 4, 3, 2, 41), 0.05f);
    const Tensor4 up = random_tensor(4, 4, 3, 2, 42);
    run("relu/dx",
        weighted_output([](const Tensor4d& p) { return relu_forward(p); },
                        up.cast<double>()),
        x, relu_backward(x, up));
  }
  {  // global average pool
    const Tensor4 x = random_tensor(4, 4, 3, 2, 51);
    const Tensor4 up = random_tensor(1, 1, 3, 2, 52);
    run("global_avg_pool/dx",
        weighted_output([](const Tensor4d& p) { return global_avg_pool_forward(p); },
                        up.cast<double>()),
        x, global_avg_pool_backward(x, up));
  }
  {  // softmax cross entropy; the loss itself is the probe
    const Tensor4 logits = random_tensor(1, 1, 5, 3, 61);
    const std::vector<int> labels = {2, 0, 4};
    const SoftmaxLossT<float> sl = softmax_cross_entropy(logits, labels);
    results.push_back(
        {"softmax_xent/dlogits",
         finite_difference_check(
             [&labels](const Tensor4d& p) {
               return softmax_cross_entropy(p, labels).loss;
             },
             logits, sl.grad, kStep, tol, threads)});
  }
  {  // batch normalization (gradient through batch mean and variance)
    const Tensor4 x = random_tensor(2, 2, 2, 3, 71);
    const Tensor4 up = random_tensor(2, 2, 2, 3, 72);
    run("batch_norm/dx",
        weighted_output([](const Tensor4d& p) { return batch_norm_forward(p).y; },
                        up.cast<double>()),
        x, batch_norm_backward(x, up));
  }
  {  // instance normalization
    const Tensor4 x = random_tensor(3, 3, 2, 2, 81);
    const Tensor4 up = random_tensor(3, 3, 2, 2, 82);
    run("instance_norm/dx",
        weighted_output([](const Tensor4d& p) { return instance_norm_forward(p); },
                        up.cast<double>()),
        x, instance_norm_backward(x, up));
  }
  {  // scaling layer: dx plus the s and b parameter gradients
    const Tensor4 x = random_tensor(3, 3, 4, 2, 91);
    const Tensor4 up = random_tensor(3, 3, 4, 2, 92);
    ScaleParams p(4);
    Rng rng(93);
    for (float& v : p.s) v = static_cast<float>(1.0 + 0.3 * rng.gaussian());
    for (float& v : p.b) v = static_cast<float>(0.2 * rng.gaussian());
    const ScaleGradsT<float> g = scale_backward(x, p, up);
    const Tensor4d xd = x.cast<double>(), upd = up.cast<double>();
    ScaleParamsT<double> pd;
    pd.s.assign(p.s.begin(), p.s.end());
    pd.b.assign(p.b.begin(), p.b.end());
    run("scale/dx",
        weighted_output([pd](const Tensor4d& q) { return scale_forward(q, pd); }, upd),
        x, g.dx);
    const Tensor4 s_probe(1, 1, 4, 1, std::vector<float>(p.s));
    const Tensor4 ds(1, 1, 4, 1, std::vector<float>(g.ds));
    run("scale/ds",
        weighted_output(
            [xd, pd](const Tensor4d& q) {
              ScaleParamsT<double> r = pd;
              r.s.assign(q.data(), q.data() + q.size());
              return scale_forward(xd, r);
            },
            upd),
        s_probe, ds);
    const Tensor4 b_probe(1, 1, 4, 1, std::vector<float>(p.b));
    const Tensor4 db(1, 1, 4, 1, std::vector<float>(g.db));
    run("scale/db",
        weighted_output(
            [xd, pd](const Tensor4d& q) {
              ScaleParamsT<double> r = pd;
              r.b.assign(q.data(), q.data() + q.size());
              return scale_forward(xd, r);
            },
            upd),
        b_probe, db);
  }
  return results;
}

LayerCheckResult gradcheck_whole_model(const std::string& preset, double tol,
                                       unsigned threads) {
  // Weight perturbations shift every downstream activation, so +-h
  // evaluations straddle relu kinks unless h is below the distance to the
  // nearest kink; the 64-bit oracle keeps roundoff ~1e-10 at this step.
  const double step = 1e-5;
  NormStrategy norm;
  norm.kind = NormKind::BN;
  norm.scale_scope = ParamScope::Domain;
  norm.moment_scope = MomentScope::Domain;
  const Blueprint bp = build_blueprint(preset, 1, norm, {3});
  SharingConfig sharing;
  sharing.mode = SharingMode::DeepSharing;
  const Model model = apply_sharing<float>(bp, sharing, 1, 400);
  const ModelT<double> model_d = model.cast<double>();

  const Tensor4 x = random_tensor(8, 8, 3, 2, 401);
  const std::vector<int> labels = {0, 1};
  const std::vector<int> tags = {1};

  ModelTapeT<float> tape;
  const Tensor4 logits = forward(model, x, 1, RunMode::Train, tape, tags);
  const SoftmaxLossT<float> sl = softmax_cross_entropy(logits, labels);
  const GradBankT<float> grads = backward(model, tape, sl.grad);

  const Tensor4d xd = x.cast<double>();
  auto loss_with = [&](const ModelT<double>& m) {
    ModelTapeT<double> t;
    const Tensor4d lg = forward(m, xd, 1, RunMode::Train, t, tags);
    return softmax_cross_entropy(lg, labels).loss;
  };

  LayerCheckResult result;
  result.name = preset + "/whole-model";
  result.report.step = step;
  result.report.tol = tol;
  auto merge = [&](const GradCheckReport& r) {
    result.report.total_slots += r.total_slots;
    result.report.flagged_slots += r.flagged_slots;
    result.report.oracle_failure |= r.oracle_failure;
    if (r.max_rel_error > result.report.max_rel_error) {
      result.report.max_rel_error = r.max_rel_error;
      result.report.worst_slot = r.worst_slot;
      result.report.worst_analytic = r.worst_analytic;
      result.report.worst_numeric = r.worst_numeric;
    }
  };

  for (std::size_t i = 0; i < model.bank.entries.size(); ++i) {
    auto f = [&, i](const Tensor4d& probe) {
      ModelT<double> m = model_d;
      m.bank.entries[i].value = probe;
      return loss_with(m);
    };
    merge(finite_difference_check<float>(f, model.bank.entries[i].value,
                                         grads.entries[i], step, tol, threads));
  }
  for (std::size_t s = 0; s < model.sites.size(); ++s) {
    const auto [scale, moments] = mux<float>(1, model.sites[s]);
    (void)moments;
    const std::size_t c = scale->channels();
    const ScaleGradT<float>* g = model.sites[s].scale_scope == ParamScope::Domain
                                     ? &grads.sites[s].per_domain[0]
                                     : &*grads.sites[s].shared;
    auto f_s = [&, s](const Tensor4d& probe) {
      ModelT<double> m = model_d;
      auto [sc, mo] = mux<double>(1, m.sites[s]);
      (void)mo;
      sc->s.assign(probe.data(), probe.data() + probe.size());
      return loss_with(m);
    };
    merge(finite_difference_check<float>(
        f_s, Tensor4(1, 1, c, 1, std::vector<float>(scale->s)),
        Tensor4(1, 1, c, 1, std::vector<float>(g->ds)), step, tol, threads));
    auto f_b = [&, s](const Tensor4d& probe) {
      ModelT<double> m = model_d;
      auto [sc, mo] = mux<double>(1, m.sites[s]);
      (void)mo;
      sc->b.assign(probe.data(), probe.data() + probe.size());
      return loss_with(m);
    };
    merge(finite_difference_check<float>(
        f_b, Tensor4(1, 1, c, 1, std::vector<float>(scale->b)),
        Tensor4(1, 1, c, 1, std::vector<float>(g->db)), step, tol, threads));
  }
  return result;
}

}  // namespace unirep
