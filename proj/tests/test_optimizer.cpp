#include <doctest.h>

#include "unirep/model.hpp"
#include "unirep/optimizer.hpp"

using namespace unirep;

namespace {

Model tiny_model(SharingMode mode = SharingMode::DeepSharing) {
  NormStrategy norm{NormKind::BN, ParamScope::Domain, MomentScope::Domain};
  const Blueprint bp = build_blueprint("desk8", 1, norm, {3, 3});
  SharingConfig sharing;
  sharing.mode = mode;
  return apply_sharing<float>(bp, sharing, 2, 5);
}

}  // namespace

TEST_CASE("plain gradient step without momentum or decay") {
  float param = 1.0f, grad = 0.5f, velocity = 0.0f;
  sgd_update_array(&param, &grad, &velocity, 1, 0.0, 0.0, 0.1);
  CHECK(param == doctest::Approx(0.95f));
  CHECK(velocity == doctest::Approx(0.5f));
}

TEST_CASE("momentum recurrence: second velocity is 1.9 g") {
  const float g = 0.37f;
  float param = 0.0f, velocity = 0.0f;
  float grad = g;
  sgd_update_array(&param, &grad, &velocity, 1, 0.9, 0.0, 0.01);
  CHECK(velocity == doctest::Approx(g));
  sgd_update_array(&param, &grad, &velocity, 1, 0.9, 0.0, 0.01);
  CHECK(velocity == doctest::Approx(1.9f * g));
}

TEST_CASE("zero gradient leaves params fixed and decays the velocity") {
  float param = 2.0f, grad = 0.0f, velocity = 1.0f;
  sgd_update_array(&param, &grad, &velocity, 1, 0.9, 0.0, 0.0);
  CHECK(param == 2.0f);
  CHECK(velocity == doctest::Approx(0.9f));
}

TEST_CASE("momentum 0 and decay 0 equal vanilla gradient descent exactly") {
  Model m = tiny_model();
  Model reference = m;
  OptimizerState state = OptimizerState::create(m, {0.0, 0.0});
  GradBank grads = make_grad_bank(m);
  Rng rng(9);
  for (auto& g : grads.entries)
    for (float& v : g.values()) v = static_cast<float>(rng.gaussian());
  const double lr = 0.05;
  sgd_step(m, grads, state, lr);
  for (std::size_t i = 0; i < m.bank.entries.size(); ++i)
    for (std::size_t j = 0; j < m.bank.entries[i].value.size(); ++j) {
      const float expect = reference.bank.entries[i].value.data()[j] -
                           static_cast<float>(lr) * grads.entries[i].data()[j];
      CHECK(m.bank.entries[i].value.data()[j] == expect);
    }
}

TEST_CASE("weight decay applies to weights, not biases or scales") {
  Model m = tiny_model();
  // Zero gradients; only decay can move anything.
  GradBank grads = make_grad_bank(m);
  OptimizerState state = OptimizerState::create(m, {0.0, 0.1});
  const Model before = m;
  sgd_step(m, grads, state, 1.0);
  for (std::size_t i = 0; i < m.bank.entries.size(); ++i) {
    const auto& e = m.bank.entries[i];
    const auto& b = before.bank.entries[i];
    for (std::size_t j = 0; j < e.value.size(); ++j) {
      if (e.kind == ParamKind::Weight)
        CHECK(e.value.data()[j] == doctest::Approx(0.9f * b.value.data()[j]));
      else
        CHECK(e.value.data()[j] == b.value.data()[j]);
    }
  }
  for (std::size_t s = 0; s < m.sites.size(); ++s)
    for (std::size_t d = 0; d < m.sites[s].domain_scales.size(); ++d) {
      CHECK(m.sites[s].domain_scales[d].s == before.sites[s].domain_scales[d].s);
      CHECK(m.sites[s].domain_scales[d].b == before.sites[s].domain_scales[d].b);
    }
}

TEST_CASE("shape mismatches are rejected") {
  Model m = tiny_model();
  GradBank grads = make_grad_bank(m);
  OptimizerState state = OptimizerState::create(m, {0.9, 1e-4});
  grads.entries[0] = Tensor4(1, 1, 1, 1);
  CHECK_THROWS_AS(sgd_step(m, grads, state, 0.1), DimensionError);
}
