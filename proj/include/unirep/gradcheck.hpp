#ifndef UNIREP_GRADCHECK_HPP_
#define UNIREP_GRADCHECK_HPP_

#include <cmath>
#include <cstddef>
#include <functional>
#include <thread>
#include <vector>

#include "unirep/tensor.hpp"

namespace unirep {

// Central-difference gradient oracle. The numeric side always evaluates the
// scalar function in 64-bit, the precision mode the analytic side was
// computed in is up to the caller (float for the production path, double for
// the high-precision oracle checks).

struct GradCheckReport {
  std::size_t total_slots = 0;
  std::size_t flagged_slots = 0;  // slots whose rel. error exceeds tol
  double max_rel_error = 0.0;
  std::size_t worst_slot = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  bool oracle_failure = false;  // f(x+-h) was non-finite
  double step = 0.0;
  double tol = 0.0;

  bool pass() const { return !oracle_failure && flagged_slots == 0; }
};

/// Relative error normalized by max(1, |a|, |n|): true relative error for
/// gradients above unit scale, absolute below it (losses here are O(1)).
inline double grad_rel_error(double analytic, double numeric) {
  const double denom = std::max({1.0, std::fabs(analytic), std::fabs(numeric)});
  return std::fabs(analytic - numeric) / denom;
}

/// Checks an analytic gradient for the scalar function f against central
/// differences (f(x+h) - f(x-h)) / 2h, slot by slot. f is evaluated in
/// 64-bit; op implementations under test must be pure and deterministic.
template <typename T>
GradCheckReport finite_difference_check(
    const std::function<double(const Tensor4d&)>& f, const Tensor4T<T>& x,
    const Tensor4T<T>& analytic, double h, double tol, unsigned threads = 1) {
  if (!x.same_dims(analytic))
    throw DimensionError("finite_difference_check: analytic grad dims " +
                         analytic.dims_str() + " vs input dims " + x.dims_str());
  GradCheckReport report;
  report.total_slots = x.size();
  report.step = h;
  report.tol = tol;

  std::vector<double> rel(x.size(), 0.0);
  std::vector<double> num(x.size(), 0.0);
  std::vector<char> bad(x.size(), 0);
  const Tensor4d base = x.template cast<double>();

  auto run_range = [&](std::size_t lo, std::size_t hi) {
    Tensor4d probe = base;
    for (std::size_t i = lo; i < hi; ++i) {
      const double orig = probe.data()[i];
      probe.data()[i] = orig + h;
      const double fp = f(probe);
      probe.data()[i] = orig - h;
      const double fm = f(probe);
      probe.data()[i] = orig;
      if (!std::isfinite(fp) || !std::isfinite(fm)) {
        bad[i] = 2;
        continue;
      }
      num[i] = (fp - fm) / (2.0 * h);
      rel[i] = grad_rel_error(static_cast<double>(analytic.data()[i]), num[i]);
      if (rel[i] > tol) bad[i] = 1;
    }
  };

  if (threads <= 1 || x.size() < 64) {
    run_range(0, x.size());
  } else {
    std::vector<std::thread> pool;
    const std::size_t chunk = (x.size() + threads - 1) / threads;
    for (unsigned w = 0; w < threads; ++w) {
      const std::size_t lo = w * chunk;
      const std::size_t hi = std::min(x.size(), lo + chunk);
      if (lo < hi) pool.emplace_back(run_range, lo, hi);
    }
    for (auto& th : pool) th.join();
  }

  for (std::size_t i = 0; i < x.size(); ++i) {
    if (bad[i] == 2) report.oracle_failure = true;
    if (bad[i] == 1) ++report.flagged_slots;
    if (rel[i] > report.max_rel_error) {
      report.max_rel_error = rel[i];
      report.worst_slot = i;
      report.worst_analytic = analytic.data()[i];
      report.worst_numeric = num[i];
    }
  }
  return report;
}

/// Scalar probe <upstream, op(x)> used to gradcheck tensor-valued ops: its
/// input gradient is exactly backward(upstream).
template <typename Op>
std::function<double(const Tensor4d&)> weighted_output(Op op, Tensor4d upstream) {
  return [op = std::move(op), upstream = std::move(upstream)](const Tensor4d& x) {
    const Tensor4d y = op(x);
    double acc = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i)
      acc += upstream.data()[i] * y.data()[i];
    return acc;
  };
}

}  // namespace unirep

#endif  // UNIREP_GRADCHECK_HPP_
