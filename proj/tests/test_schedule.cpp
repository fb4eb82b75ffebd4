#include <doctest.h>

#include "unirep/schedule.hpp"
#include "unirep/error.hpp"

using namespace unirep;

TEST_CASE("standard schedule follows the 0.01 -> 0.1 -> 1e-4 trajectory") {
  const Schedule s = Schedule::standard(2000);
  CHECK(lr_at(s, 0) == doctest::Approx(0.01));
  CHECK(lr_at(s, 99) == doctest::Approx(0.01));
  CHECK(lr_at(s, 100) == doctest::Approx(0.1));  // first post-warm-up step
  CHECK(lr_at(s, 999) == doctest::Approx(0.1));
  CHECK(lr_at(s, 1000) == doctest::Approx(0.01));
  CHECK(lr_at(s, 1499) == doctest::Approx(0.01));
  CHECK(lr_at(s, 1500) == doctest::Approx(1e-4));
  CHECK(lr_at(s, 1999) == doctest::Approx(1e-4));  // last step
  CHECK_THROWS_AS(lr_at(s, 2000), ScheduleError);
}

TEST_CASE("schedule validation") {
  Schedule s = Schedule::standard(1000);
  s.warmup_lr = 0.2;  // not below base
  CHECK_THROWS_AS(s.validate(), ConfigError);
  s = Schedule::standard(1000);
  s.boundaries = {700, 400};
  CHECK_THROWS_AS(s.validate(), ConfigError);
  s = Schedule::standard(1000);
  s.boundaries = {400, 1000};
  CHECK_THROWS_AS(s.validate(), ConfigError);
  s = Schedule::standard(1000);
  s.final_lr = 0.5;
  CHECK_THROWS_AS(s.validate(), ConfigError);

  // A zero learning-rate schedule is expressible (no warm-up).
  Schedule zero;
  zero.total_steps = 10;
  zero.warmup_steps = 0;
  zero.base_lr = 0.0;
  zero.final_lr = 0.0;
  zero.boundaries = {};
  CHECK_NOTHROW(zero.validate());
  CHECK(lr_at(zero, 5) == 0.0);
}

TEST_CASE("round robin cycles domains in order") {
  const BatchPlan plan = round_robin(3, 6);
  REQUIRE(plan.entries.size() == 6);
  const std::size_t expect[6] = {1, 2, 3, 1, 2, 3};
  for (std::size_t i = 0; i < 6; ++i) {
    CHECK(plan.entries[i].first == expect[i]);
    CHECK(plan.entries[i].second == i / 3);
  }
}

TEST_CASE("round robin with one domain is constant") {
  const BatchPlan plan = round_robin(1, 5);
  for (std::size_t i = 0; i < 5; ++i) {
    CHECK(plan.entries[i].first == 1);
    CHECK(plan.entries[i].second == i);
  }
}

TEST_CASE("after k*D steps each domain appears exactly k times") {
  const BatchPlan plan = round_robin(4, 4 * 7);
  std::size_t counts[5] = {0, 0, 0, 0, 0};
  for (const auto& [d, v] : plan.entries) {
    (void)v;
    ++counts[d];
  }
  for (std::size_t d = 1; d <= 4; ++d) CHECK(counts[d] == 7);
}

TEST_CASE("prefix fairness: per-domain visit counts differ by at most one") {
  for (std::size_t d_count : {2u, 3u, 10u}) {
    const BatchPlan plan = round_robin(d_count, 1000);
    std::vector<std::size_t> counts(d_count + 1, 0);
    for (std::size_t k = 0; k < plan.entries.size(); ++k) {
      ++counts[plan.entries[k].first];
      std::size_t lo = counts[1], hi = counts[1];
      for (std::size_t d = 2; d <= d_count; ++d) {
        lo = std::min(lo, counts[d]);
        hi = std::max(hi, counts[d]);
      }
      REQUIRE(hi - lo <= 1);
    }
  }
}
