#include "unirep/schedule.hpp"

#include <string>

#include "unirep/error.hpp"

namespace unirep {

void Schedule::validate() const {
  if (total_steps < 1) throw ConfigError("schedule: total_steps must be >= 1");
  if (warmup_steps >= total_steps)
    throw ConfigError("schedule: warm-up covers the whole run");
  if (warmup_steps > 0 && !(warmup_lr < base_lr))
    throw ConfigError("schedule: warmup_lr must be below base_lr");
  if (final_lr > base_lr) throw ConfigError("schedule: final_lr must be <= base_lr");
  std::size_t prev = 0;
  for (std::size_t b : boundaries) {
    if (b <= prev || b >= total_steps)
      throw ConfigError("schedule: boundaries must be strictly increasing within "
                        "total_steps, got boundary " + std::to_string(b));
    prev = b;
  }
}

Schedule Schedule::standard(std::size_t total_steps) {
  Schedule s;
  s.total_steps = total_steps;
  s.warmup_steps = total_steps / 20;
  s.boundaries = {total_steps / 2, total_steps * 3 / 4};
  s.validate();
  return s;
}

double lr_at(const Schedule& schedule, std::size_t step) {
  if (step >= schedule.total_steps)
    throw ScheduleError("lr_at: step " + std::to_string(step) + " outside [0," +
                        std::to_string(schedule.total_steps) + ")");
  if (step < schedule.warmup_steps) return schedule.warmup_lr;
  std::size_t passed = 0;
  for (std::size_t b : schedule.boundaries)
    if (step >= b) ++passed;
  if (!schedule.boundaries.empty() && passed == schedule.boundaries.size())
    return schedule.final_lr;
  double lr = schedule.base_lr;
  for (std::size_t i = 0; i < passed; ++i) lr *= 0.1;
  return lr;
}

BatchPlan round_robin(std::size_t num_domains, std::size_t steps) {
  if (num_domains < 1) throw ConfigError("round_robin: need at least one domain");
  if (steps < 1) throw ConfigError("round_robin: need at least one step");
  BatchPlan plan;
  plan.entries.reserve(steps);
  for (std::size_t k = 0; k < steps; ++k)
    plan.entries.emplace_back(1 + k % num_domains, k / num_domains);
  return plan;
}

}  // namespace unirep
