#include <doctest.h>

#include <cmath>

#include "unirep/layers.hpp"
#include "unirep/rng.hpp"

using namespace unirep;

namespace {

Tensor4 random_tensor(std::size_t h, std::size_t w, std::size_t c, std::size_t t,
                      std::uint64_t seed) {
  Tensor4 out(h, w, c, t);
  Rng rng(seed);
  for (float& v : out.values()) v = static_cast<float>(rng.gaussian());
  return out;
}

// Independent direct-summation convolution used as the oracle: plain
// quadruple loop straight from the definition, no repacking.
Tensor4d conv_oracle(const Tensor4d& x, const Tensor4d& w, const Tensor4d& b,
                     int stride, int pad) {
  const std::size_t oh = (x.rows() + 2 * pad - w.rows()) / stride + 1;
  const std::size_t ow = (x.cols() + 2 * pad - w.cols()) / stride + 1;
  Tensor4d y(oh, ow, w.batch(), x.batch());
  for (std::size_t t = 0; t < x.batch(); ++t)
    for (std::size_t vo = 0; vo < oh; ++vo)
      for (std::size_t uo = 0; uo < ow; ++uo)
        for (std::size_t o = 0; o < w.batch(); ++o) {
          double acc = b.data()[o];
          for (std::size_t kv = 0; kv < w.rows(); ++kv)
            for (std::size_t ku = 0; ku < w.cols(); ++ku)
              for (std::size_t i = 0; i < x.channels(); ++i) {
                const long vi = static_cast<long>(vo * stride + kv) - pad;
                const long ui = static_cast<long>(uo * stride + ku) - pad;
                if (vi < 0 || vi >= static_cast<long>(x.rows()) || ui < 0 ||
                    ui >= static_cast<long>(x.cols()))
                  continue;
                acc += w.at(kv, ku, i, o) *
                       x.at(static_cast<std::size_t>(vi), static_cast<std::size_t>(ui), i, t);
              }
          y.at(vo, uo, o, t) = acc;
        }
  return y;
}

}  // namespace

TEST_CASE("conv2d: 1x1 identity filter is the identity map") {
  Tensor4 x(1, 1, 1, 1, {3.0f});
  Tensor4 w(1, 1, 1, 1, {1.0f});
  Tensor4 b(1, 1, 1, 1, {0.0f});
  Tensor4 y = conv2d_forward(x, w, b, 1, 0);
  CHECK(y.data()[0] == 3.0f);

  // Property: identity filter reproduces any input exactly.
  Tensor4 xr = random_tensor(5, 4, 1, 3, 7);
  Tensor4 yr = conv2d_forward(xr, w, b, 1, 0);
  CHECK(yr == xr);
}

TEST_CASE("conv2d: zero filter outputs the bias per channel") {
  Tensor4 x = random_tensor(4, 4, 2, 2, 8);
  Tensor4 w(3, 3, 2, 3);
  Tensor4 b(1, 1, 3, 1, {0.5f, -1.0f, 2.0f});
  Tensor4 y = conv2d_forward(x, w, b, 1, 1);
  for (std::size_t t = 0; t < y.batch(); ++t)
    for (std::size_t v = 0; v < y.rows(); ++v)
      for (std::size_t u = 0; u < y.cols(); ++u)
        for (std::size_t c = 0; c < 3; ++c)
          CHECK(y.at(v, u, c, t) == b.data()[c]);
}

TEST_CASE("conv2d: all-ones 3x3 sums to 9 (direct summation oracle)") {
  Tensor4 x(3, 3, 1, 1);
  x.fill(1.0f);
  Tensor4 w(3, 3, 1, 1);
  w.fill(1.0f);
  Tensor4 b(1, 1, 1, 1);
  Tensor4 y = conv2d_forward(x, w, b, 1, 0);
  CHECK(y.size() == 1);
  CHECK(y.data()[0] == doctest::Approx(9.0f));
}

TEST_CASE("conv2d matches the direct-summation oracle on random cases") {
  struct Case {
    std::size_t h, w, cin, cout, k, t;
    int stride, pad;
  };
  const Case cases[] = {
      {6, 6, 3, 4, 3, 2, 1, 1}, {6, 6, 2, 3, 2, 2, 2, 0}, {5, 7, 1, 2, 1, 1, 1, 0},
      {8, 8, 4, 4, 3, 1, 1, 0}};
  for (const Case& c : cases) {
    Tensor4 x = random_tensor(c.h, c.w, c.cin, c.t, 100 + c.h);
    Tensor4 w = random_tensor(c.k, c.k, c.cin, c.cout, 200 + c.h);
    Tensor4 b = random_tensor(1, 1, c.cout, 1, 300 + c.h);
    Tensor4 y = conv2d_forward(x, w, b, c.stride, c.pad);
    Tensor4d expect = conv_oracle(x.cast<double>(), w.cast<double>(), b.cast<double>(),
                                  c.stride, c.pad);
    REQUIRE(y.size() == expect.size());
    for (std::size_t i = 0; i < y.size(); ++i)
      CHECK(y.data()[i] == doctest::Approx(expect.data()[i]).epsilon(1e-4));
  }
}

TEST_CASE("conv2d shape errors name the offending axis") {
  Tensor4 x(4, 4, 3, 1);
  Tensor4 w(3, 3, 2, 4);  // Cin mismatch
  Tensor4 b(1, 1, 4, 1);
  CHECK_THROWS_WITH_AS(conv2d_forward(x, w, b, 1, 1),
                       doctest::Contains("channel axis"), DimensionError);
  Tensor4 w2(3, 3, 3, 4);
  CHECK_THROWS_AS(conv2d_forward(x, w2, b, 2, 0), ConfigError);  // (4-3)/2 not integral
  Tensor4 bad_bias(1, 1, 5, 1);
  CHECK_THROWS_AS(conv2d_forward(x, w2, bad_bias, 1, 1), DimensionError);
}

TEST_CASE("linear: identity and zero matrices") {
  Tensor4 x(1, 2, 1, 2, {1.0f, 2.0f, 3.0f, 4.0f});  // two instances, F=2
  Tensor4 eye(1, 1, 2, 2, {1.0f, 0.0f, 0.0f, 1.0f});
  Tensor4 b0(1, 1, 2, 1);
  Tensor4 y = linear_forward(x, eye, b0);
  CHECK(y.at(0, 0, 0, 0) == 1.0f);
  CHECK(y.at(0, 0, 1, 0) == 2.0f);
  CHECK(y.at(0, 0, 0, 1) == 3.0f);
  CHECK(y.at(0, 0, 1, 1) == 4.0f);

  Tensor4 zero(1, 1, 2, 3);
  Tensor4 b(1, 1, 3, 1, {5.0f, 6.0f, 7.0f});
  Tensor4 yz = linear_forward(x, zero, b);
  for (std::size_t t = 0; t < 2; ++t)
    for (std::size_t k = 0; k < 3; ++k) CHECK(yz.at(0, 0, k, t) == b.data()[k]);
}

TEST_CASE("linear: hand matrix-multiply oracle") {
  // W = [[1,1],[1,-1]] (row-major K x F), x = [1,2] -> [3,-1]
  Tensor4 x(1, 1, 2, 1, {1.0f, 2.0f});
  Tensor4 w(1, 1, 2, 2, {1.0f, 1.0f, 1.0f, -1.0f});
  Tensor4 b(1, 1, 2, 1);
  Tensor4 y = linear_forward(x, w, b);
  CHECK(y.data()[0] == doctest::Approx(3.0f));
  CHECK(y.data()[1] == doctest::Approx(-1.0f));
}

TEST_CASE("linear rejects mismatched feature length") {
  Tensor4 x(1, 1, 3, 1);
  Tensor4 w(1, 1, 2, 2);
  Tensor4 b(1, 1, 2, 1);
  CHECK_THROWS_AS(linear_forward(x, w, b), DimensionError);
}

TEST_CASE("relu forward and backward") {
  Tensor4 x(1, 1, 3, 1, {-1.0f, 0.0f, 2.0f});
  Tensor4 y = relu_forward(x);
  CHECK(y.data()[0] == 0.0f);
  CHECK(y.data()[1] == 0.0f);
  CHECK(y.data()[2] == 2.0f);

  Tensor4 up(1, 1, 3, 1, {5.0f, 5.0f, 5.0f});
  Tensor4 dx = relu_backward(x, up);
  CHECK(dx.data()[0] == 0.0f);
  CHECK(dx.data()[1] == 0.0f);  // subgradient at 0 is 0
  CHECK(dx.data()[2] == 5.0f);

  Tensor4 neg(2, 2, 1, 1);
  neg.fill(-3.0f);
  Tensor4 yn = relu_forward(neg);
  Tensor4 dn = relu_backward(neg, random_tensor(2, 2, 1, 1, 4));
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(yn.data()[i] == 0.0f);
    CHECK(dn.data()[i] == 0.0f);
  }
}

TEST_CASE("global average pool") {
  Tensor4 c(3, 3, 2, 2);
  c.fill(4.25f);
  Tensor4 y = global_avg_pool_forward(c);
  for (std::size_t i = 0; i < y.size(); ++i)
    CHECK(y.data()[i] == doctest::Approx(4.25f));

  Tensor4 x(2, 2, 1, 1, {1.0f, 2.0f, 3.0f, 4.0f});
  CHECK(global_avg_pool_forward(x).data()[0] == doctest::Approx(2.5f));

  Tensor4 up(1, 1, 1, 1, {1.0f});
  Tensor4 dx = global_avg_pool_backward(x, up);
  for (std::size_t i = 0; i < 4; ++i) CHECK(dx.data()[i] == doctest::Approx(0.25f));
}

TEST_CASE("global_avg_pool backward with upstream ones sums to C*T") {
  Tensor4 x = random_tensor(5, 3, 4, 2, 17);
  Tensor4 up(1, 1, 4, 2);
  up.fill(1.0f);
  Tensor4 dx = global_avg_pool_backward(x, up);
  double sum = 0.0;
  for (float v : dx.values()) sum += v;
  CHECK(sum == doctest::Approx(4.0 * 2.0).epsilon(1e-6));
}

TEST_CASE("softmax cross entropy: uniform and extreme logits") {
  Tensor4 logits(1, 1, 2, 1, {0.0f, 0.0f});
  auto r = softmax_cross_entropy(logits, {0});
  CHECK(r.loss == doctest::Approx(std::log(2.0)));

  Tensor4 extreme(1, 1, 2, 1, {1000.0f, -1000.0f});
  auto re = softmax_cross_entropy(extreme, {0});
  CHECK(std::isfinite(re.loss));
  CHECK(re.loss == doctest::Approx(0.0).epsilon(1e-6));
  for (float g : re.grad.values()) CHECK(std::isfinite(g));
}

TEST_CASE("softmax cross entropy: label errors carry the offending index") {
  Tensor4 logits(1, 1, 3, 2);
  CHECK_THROWS_WITH_AS(softmax_cross_entropy(logits, {0, 3}),
                       doctest::Contains("batch index 1"), LabelError);
  CHECK_THROWS_AS(softmax_cross_entropy(logits, {0}), DimensionError);
}

TEST_CASE("softmax loss is invariant to per-instance logit shifts") {
  Tensor4 logits = random_tensor(1, 1, 5, 3, 23);
  const std::vector<int> labels = {1, 4, 0};
  const float base = softmax_cross_entropy(logits, labels).loss;
  Tensor4 shifted = logits;
  for (std::size_t t = 0; t < 3; ++t) {
    float* p = shifted.instance(t);
    for (std::size_t k = 0; k < 5; ++k) p[k] += 7.5f * (1 + static_cast<float>(t));
  }
  const float after = softmax_cross_entropy(shifted, labels).loss;
  CHECK(std::fabs(after - base) < 1e-6f);
}

TEST_CASE("primitives are deterministic within a build") {
  Tensor4 x = random_tensor(6, 6, 3, 2, 31);
  Tensor4 w = random_tensor(3, 3, 3, 4, 32);
  Tensor4 b = random_tensor(1, 1, 4, 1, 33);
  Tensor4 y1 = conv2d_forward(x, w, b, 1, 1);
  Tensor4 y2 = conv2d_forward(x, w, b, 1, 1);
  CHECK(y1 == y2);
  auto g1 = conv2d_backward(x, w, b, 1, 1, y1);
  auto g2 = conv2d_backward(x, w, b, 1, 1, y1);
  CHECK(g1.dx == g2.dx);
  CHECK(g1.dweights == g2.dweights);
}
