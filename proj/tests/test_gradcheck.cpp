#include <doctest.h>

#include "unirep/gradcheck.hpp"
#include "unirep/layers.hpp"
#include "unirep/normalization.hpp"
#include "unirep/rng.hpp"
#include "unirep/verification.hpp"

using namespace unirep;

namespace {

Tensor4 random_tensor(std::size_t h, std::size_t w, std::size_t c, std::size_t t,
                      std::uint64_t seed) {
  Tensor4 out(h, w, c, t);
  Rng rng(seed);
  for (float& v : out.values()) v = static_cast<float>(rng.gaussian());
  return out;
}

}  // namespace

TEST_CASE("linear layer gradients in 64-bit mode reach 1e-6") {
  Tensor4d x(2, 2, 2, 2);
  Tensor4d w(1, 1, 8, 3);
  Tensor4d b(1, 1, 3, 1);
  Rng rng(5);
  for (double& v : x.values()) v = rng.gaussian();
  for (double& v : w.values()) v = rng.gaussian();
  for (double& v : b.values()) v = rng.gaussian();
  Tensor4d up(1, 1, 3, 2);
  for (double& v : up.values()) v = rng.gaussian();
  const auto g = linear_backward(x, w, b, up);
  const auto report = finite_difference_check<double>(
      weighted_output([&](const Tensor4d& p) { return linear_forward(p, w, b); }, up),
      x, g.dx, 1e-3, 1e-6);
  CHECK(report.pass());
  CHECK(report.max_rel_error < 1e-6);
}

TEST_CASE("zero function has zero analytic and numeric gradient") {
  Tensor4 x = random_tensor(2, 2, 2, 1, 6);
  const auto report = finite_difference_check<float>(
      [](const Tensor4d&) { return 0.0; }, x, x.zeros_like(), 1e-3, 1e-6);
  CHECK(report.pass());
  CHECK(report.max_rel_error == 0.0);
}

TEST_CASE("negative control: sign-flipped backward flags every slot") {
  Tensor4 x = random_tensor(2, 2, 2, 2, 7);
  Tensor4 w = random_tensor(1, 1, 8, 3, 8);
  Tensor4 b = random_tensor(1, 1, 3, 1, 9);
  Tensor4 up(1, 1, 3, 2);
  up.fill(1.0f);
  auto g = linear_backward(x, w, b, up);
  Tensor4 corrupted = g.dx;
  for (float& v : corrupted.values()) v = -v;
  const Tensor4d wd = w.cast<double>(), bd = b.cast<double>();
  const auto report = finite_difference_check<float>(
      weighted_output([&](const Tensor4d& p) { return linear_forward(p, wd, bd); },
                      up.cast<double>()),
      x, corrupted, 1e-3, 1e-4);
  CHECK_FALSE(report.pass());
  CHECK(report.flagged_slots == report.total_slots);
}

TEST_CASE("oracle failure flagged when f is non-finite") {
  Tensor4 x(1, 1, 1, 1, {1.0f});
  const auto report = finite_difference_check<float>(
      [](const Tensor4d& p) { return std::log(-1.0 * p.data()[0]); }, x,
      x.zeros_like(), 1e-3, 1e-4);
  CHECK(report.oracle_failure);
  CHECK_FALSE(report.pass());
}

TEST_CASE("every primitive passes the 32-bit gradient oracle at 1e-4") {
  for (const LayerCheckResult& r : gradcheck_layers(1e-4, 1)) {
    INFO(r.name);
    CHECK(r.report.pass());
    CHECK(r.report.max_rel_error < 1e-4);
  }
}

TEST_CASE("softmax analytic gradient matches finite differences (K=5, T=3)") {
  Tensor4 logits = random_tensor(1, 1, 5, 3, 61);
  const std::vector<int> labels = {2, 0, 4};
  const auto sl = softmax_cross_entropy(logits, labels);
  const auto report = finite_difference_check<float>(
      [&](const Tensor4d& p) { return softmax_cross_entropy(p, labels).loss; }, logits,
      sl.grad, 1e-3, 1e-4);
  CHECK(report.pass());
  CHECK(report.max_rel_error < 1e-4);
}

TEST_CASE("64-bit mode: primitives reach 1e-6 on random tensors") {
  Rng rng(77);
  Tensor4d x(3, 3, 2, 2);
  for (double& v : x.values()) v = rng.gaussian();
  Tensor4d up(3, 3, 2, 2);
  for (double& v : up.values()) v = rng.gaussian();
  const Tensor4d dx = batch_norm_backward(x, up);
  const auto report = finite_difference_check<double>(
      weighted_output([](const Tensor4d& p) { return batch_norm_forward(p).y; }, up), x,
      dx, 1e-4, 1e-6);
  CHECK(report.pass());
}
