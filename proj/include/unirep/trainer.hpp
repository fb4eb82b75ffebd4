#ifndef UNIREP_TRAINER_HPP_
#define UNIREP_TRAINER_HPP_

#include <cstdint>
#include <functional>
#include <vector>

#include "unirep/domains.hpp"
#include "unirep/model.hpp"
#include "unirep/optimizer.hpp"
#include "unirep/schedule.hpp"

namespace unirep {

enum class SplitKind { Train, Val };

/// Deploy-time normalization choice: frozen accumulated moments versus
/// on-the-fly batch statistics (the BN+ regime).
enum class EvalNormMode { Frozen, OnTheFly };

struct TrainOptions {
  Schedule schedule;
  OptimizerConfig optimizer;
  std::size_t batch_size = 32;
  std::size_t eval_every = 200;      // 0 = final evaluation only
  std::size_t checkpoint_every = 0;  // 0 = final checkpoint only (via hook)
  // One optimizer step per round-robin cycle, gradients averaged over the D
  // most recent per-domain batches (computed by up to `threads` workers).
  bool parallel_accumulation = false;
  unsigned threads = 1;
  std::uint64_t data_seed = 2;
  std::uint64_t augment_seed = 3;
};

/// One evaluation point. wall_clock_sec is timing metadata for the console
/// and run summary; it is never written into metrics files, which must be
/// byte-identical across reruns.
struct MetricsRecord {
  std::size_t step = 0;  // number of completed batches
  std::vector<double> train_loss;
  std::vector<double> val_error;
  double mean_error = 0.0;
  double lr = 0.0;
  double wall_clock_sec = 0.0;
};

double mean_error(const std::vector<double>& errors);

struct DomainIteratorState {
  std::uint64_t epoch = 0;
  std::uint64_t pos = 0;
};

/// Everything beyond the model needed to continue a run bit-for-bit.
struct TrainerState {
  std::size_t step = 0;
  OptimizerState optimizer;
  std::vector<DomainIteratorState> iterators;
  std::vector<double> loss_sum;  // per domain, window since the last record
  std::vector<std::uint64_t> loss_count;
};

struct TrainHooks {
  std::function<void(const MetricsRecord&)> on_metrics;
  std::function<void(const Model&, const TrainerState&)> on_checkpoint;
};

struct TrainResult {
  Model model;
  TrainerState state;
  std::vector<MetricsRecord> history;
};

/// Central-crop top-1 error in percent over one split. Argmax ties break
/// toward the lowest class index; full-sharing models score through the
/// domain's class pairing.
double evaluate(const Model& model, const Dataset& dataset, std::size_t d,
                SplitKind split, EvalNormMode mode, std::size_t batch_size);

/// The round-robin pure-batch training regime. Datasets must be split and
/// whitened, aligned with domains 1..D. Passing `resume` continues a
/// checkpointed run from its recorded step.
TrainResult train(Model model, const std::vector<Dataset>& datasets,
                  const TrainOptions& options, TrainHooks hooks = {},
                  const TrainerState* resume = nullptr);

}  // namespace unirep

#endif  // UNIREP_TRAINER_HPP_
