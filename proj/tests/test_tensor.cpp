#include <doctest.h>

#include "unirep/tensor.hpp"

using namespace unirep;

TEST_CASE("tensor dims and layout") {
  Tensor4 t(2, 3, 4, 5);
  CHECK(t.size() == 2u * 3 * 4 * 5);
  CHECK(t.rows() == 2);
  CHECK(t.cols() == 3);
  CHECK(t.channels() == 4);
  CHECK(t.batch() == 5);

  // Instance-major, channel-fastest layout.
  CHECK(t.index(0, 0, 1, 0) == 1);
  CHECK(t.index(0, 1, 0, 0) == 4);
  CHECK(t.index(1, 0, 0, 0) == 12);
  CHECK(t.index(0, 0, 0, 1) == 24);
  CHECK(t.instance(2) == t.data() + 2 * t.instance_size());

  t.at(1, 2, 3, 4) = 7.0f;
  CHECK(t.data()[t.index(1, 2, 3, 4)] == 7.0f);
}

TEST_CASE("tensor rejects bad dims and data lengths") {
  CHECK_THROWS_AS(Tensor4(0, 1, 1, 1), DimensionError);
  CHECK_THROWS_AS(Tensor4(1, 1, 2, 1, {1.0f}), DimensionError);
  CHECK_NOTHROW(Tensor4(1, 1, 2, 1, {1.0f, 2.0f}));
}

TEST_CASE("grad pair enforces matching dims") {
  Tensor4 v(2, 2, 1, 1);
  CHECK_NOTHROW(GradPair(v, v.zeros_like()));
  CHECK_THROWS_AS(GradPair(v, Tensor4(2, 2, 1, 2)), DimensionError);
}

TEST_CASE("finite check sees NaN and Inf") {
  Tensor4 t(1, 1, 2, 1, {1.0f, 2.0f});
  CHECK(t.all_finite());
  t.data()[1] = std::numeric_limits<float>::infinity();
  CHECK_FALSE(t.all_finite());
  t.data()[1] = std::numeric_limits<float>::quiet_NaN();
  CHECK_FALSE(t.all_finite());
}

TEST_CASE("cast between precisions") {
  Tensor4 t(1, 1, 3, 1, {1.5f, -2.0f, 0.25f});
  Tensor4d d = t.cast<double>();
  CHECK(d.data()[0] == 1.5);
  Tensor4 back = d.cast<float>();
  CHECK(back == t);
}
