#ifndef UNIREP_SCHEDULE_HPP_
#define UNIREP_SCHEDULE_HPP_

#include <cstddef>
#include <utility>
#include <vector>

namespace unirep {

/// Warm-up followed by piecewise-constant decay: warmup_lr until
/// warmup_steps, then base_lr with a x0.1 drop at each boundary except the
/// last, which drops directly to final_lr. With the default boundaries at
/// 50% and 75% of a run and base 0.1 this gives 0.01 -> 0.1 -> 0.01 -> 1e-4.
struct Schedule {
  std::size_t total_steps = 2000;
  std::size_t warmup_steps = 100;
  double warmup_lr = 0.01;
  double base_lr = 0.1;
  double final_lr = 1e-4;
  std::vector<std::size_t> boundaries;  // strictly increasing, < total_steps

  void validate() const;

  /// warmup = 5% of total, drops at 50% and 75%.
  static Schedule standard(std::size_t total_steps);
};

double lr_at(const Schedule& schedule, std::size_t step);

/// Pure-batch round-robin plan: entry k is (domain 1 + k mod D, visit k / D).
/// Per-domain visit counts over any prefix differ by at most one.
struct BatchPlan {
  std::vector<std::pair<std::size_t, std::size_t>> entries;  // (domain id, visit index)
  std::size_t batch_size = 32;
};

BatchPlan round_robin(std::size_t num_domains, std::size_t steps);

}  // namespace unirep

#endif  // UNIREP_SCHEDULE_HPP_
