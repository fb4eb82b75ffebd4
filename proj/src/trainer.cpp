#include "unirep/trainer.hpp"

#include <chrono>
#include <cmath>
#include <thread>

#include "unirep/augment.hpp"
#include "unirep/error.hpp"
#include "unirep/layers.hpp"
#include "unirep/rng.hpp"

namespace unirep {

double mean_error(const std::vector<double>& errors) {
  double acc = 0.0;
  for (double e : errors) acc += e;
  return acc / static_cast<double>(errors.size());
}

namespace {

struct Batch {
  Tensor4 images;
  std::vector<int> labels;   // already mapped through the class pairing
  std::vector<int> domains;  // purity tags
};

// Shuffled pass over one domain's training split; reshuffles at each wrap
// with a (data_seed, domain, epoch) derived stream, so iterator state is
// just two integers.
class DomainIterator {
public:
  DomainIterator(const Dataset& dataset, std::size_t domain, std::uint64_t data_seed,
                 const DomainIteratorState& state)
      : dataset_(dataset), domain_(domain), data_seed_(data_seed), state_(state) {
    reshuffle();
  }

  std::vector<std::uint32_t> next(std::size_t batch_size) {
    std::vector<std::uint32_t> out;
    out.reserve(batch_size);
    while (out.size() < batch_size) {
      if (state_.pos >= order_.size()) {
        ++state_.epoch;
        state_.pos = 0;
        reshuffle();
      }
      out.push_back(order_[state_.pos++]);
    }
    return out;
  }

  const DomainIteratorState& state() const { return state_; }

private:
  void reshuffle() {
    order_.assign(dataset_.split.train.begin(), dataset_.split.train.end());
    Rng rng(derive_seed(data_seed_, rng_tag::kShuffle, domain_, state_.epoch));
    for (std::size_t i = order_.size(); i > 1; --i)
      std::swap(order_[i - 1], order_[rng.uniform_int(i)]);
  }

  const Dataset& dataset_;
  std::size_t domain_;
  std::uint64_t data_seed_;
  DomainIteratorState state_;
  std::vector<std::uint32_t> order_;
};

Batch assemble_batch(const Dataset& dataset, const std::vector<std::uint32_t>& indices,
                     std::size_t domain, const std::vector<int>& pairing,
                     std::uint64_t augment_seed, std::size_t step) {
  const auto& desc = dataset.descriptor;
  Batch batch;
  batch.images = Tensor4(desc.height, desc.width, desc.channels, indices.size());
  batch.labels.reserve(indices.size());
  batch.domains = {static_cast<int>(domain)};
  const std::size_t pad = augment_pad(desc.height);
  Rng rng(derive_seed(augment_seed, rng_tag::kAugment, domain, step));
  for (std::size_t i = 0; i < indices.size(); ++i) {
    const CropChoice choice =
        draw_crop(desc.height, desc.width, desc.flip_allowed, rng);
    apply_crop(dataset.images.instance(indices[i]), batch.images.instance(i),
               desc.height, desc.width, desc.channels, pad, choice);
    batch.labels.push_back(pairing[static_cast<std::size_t>(dataset.labels[indices[i]])]);
  }
  return batch;
}

void validate_setup(const Model& model, const std::vector<Dataset>& datasets,
                    const TrainOptions& options) {
  std::vector<std::string> violations;
  const std::size_t d_count = model.num_domains();
  if (datasets.size() != d_count)
    violations.push_back("dataset count " + std::to_string(datasets.size()) +
                         " vs model domains " + std::to_string(d_count));
  for (std::size_t d = 0; d < datasets.size() && d < d_count; ++d) {
    const Dataset& ds = datasets[d];
    if (ds.descriptor.channels != model.blueprint.input_channels)
      violations.push_back("domain " + std::to_string(d + 1) + ": channels " +
                           std::to_string(ds.descriptor.channels) + " vs blueprint " +
                           std::to_string(model.blueprint.input_channels));
    if (ds.descriptor.classes != model.blueprint.class_counts[d])
      violations.push_back("domain " + std::to_string(d + 1) + ": class count " +
                           std::to_string(ds.descriptor.classes) + " vs blueprint " +
                           std::to_string(model.blueprint.class_counts[d]));
    if (ds.split.empty())
      violations.push_back("domain " + std::to_string(d + 1) + ": no split assignment");
    else if (ds.split.train.empty())
      violations.push_back("domain " + std::to_string(d + 1) + ": empty training split");
    if (ds.descriptor.whiten_std.empty())
      violations.push_back("domain " + std::to_string(d + 1) + ": dataset not whitened");
  }
  if (options.batch_size < 1) violations.push_back("batch size must be >= 1");
  try {
    options.schedule.validate();
  } catch (const ConfigError& e) {
    violations.push_back(e.what());
  }
  if (!violations.empty())
    throw ConfigError("train: configuration rejected before any step", violations);
}

RunMode eval_run_mode(EvalNormMode mode) {
  return mode == EvalNormMode::Frozen ? RunMode::TestFrozen : RunMode::TestOnTheFly;
}

// Accumulates one training batch's site statistics into the muxed moment
// collections; active only inside the final-epoch window.
void accumulate_tape_moments(Model& model, const ModelTapeT<float>& tape,
                             std::size_t d) {
  for (std::size_t s = 0; s < model.sites.size(); ++s) {
    const auto& ctx = tape.site_ctx[s];
    if (!ctx.batch_moments) continue;
    auto [scale, moments] = mux(d, model.sites[s]);
    (void)scale;
    if (moments == nullptr) continue;
    *moments = accumulate_moments(*moments, *ctx.batch_moments);
  }
}

void reset_moments(Model& model) {
  for (auto& site : model.sites) {
    for (auto& m : site.domain_moments) m = MomentParams(m.channels());
    if (site.shared_moments)
      *site.shared_moments = MomentParams(site.shared_moments->channels());
  }
}

struct StepOutcome {
  GradBank grads;
  ModelTapeT<float> tape;
  float loss = 0.0f;
};

StepOutcome run_batch(const Model& model, const Batch& batch, std::size_t d) {
  StepOutcome out;
  Tensor4 logits =
      forward(model, batch.images, d, RunMode::Train, out.tape, batch.domains);
  SoftmaxLossT<float> sl = softmax_cross_entropy(logits, batch.labels);
  out.loss = sl.loss;
  out.grads = backward(model, out.tape, sl.grad);
  return out;
}

}  // namespace

double evaluate(const Model& model, const Dataset& dataset, std::size_t d,
                SplitKind split, EvalNormMode mode, std::size_t batch_size) {
  if (d < 1 || d > model.num_domains())
    throw DomainIndexError("evaluate: domain id " + std::to_string(d) + " out of [1," +
                           std::to_string(model.num_domains()) + "]");
  const std::vector<std::uint32_t>& indices =
      split == SplitKind::Train ? dataset.split.train : dataset.split.val;
  if (indices.empty()) throw ConfigError("evaluate: empty split");
  const auto& desc = dataset.descriptor;
  const std::vector<int>& pairing = model.class_pairing[d - 1];
  const RunMode run_mode = eval_run_mode(mode);

  std::size_t wrong = 0;
  for (std::size_t start = 0; start < indices.size(); start += batch_size) {
    const std::size_t n = std::min(batch_size, indices.size() - start);
    Tensor4 images(desc.height, desc.width, desc.channels, n);
    for (std::size_t i = 0; i < n; ++i) {
      const float* src = dataset.images.instance(indices[start + i]);
      std::copy(src, src + images.instance_size(), images.instance(i));
    }
    const Tensor4 logits = forward(model, images, d, run_mode,
                                   {static_cast<int>(d)});
    for (std::size_t i = 0; i < n; ++i) {
      const float* row = logits.instance(i);
      std::size_t best = 0;
      for (std::size_t k = 1; k < logits.channels(); ++k)
        if (row[k] > row[best]) best = k;  // ties keep the lowest index
      const int label = dataset.labels[indices[start + i]];
      if (static_cast<int>(best) != pairing[static_cast<std::size_t>(label)]) ++wrong;
    }
  }
  return 100.0 * static_cast<double>(wrong) / static_cast<double>(indices.size());
}

TrainResult train(Model model, const std::vector<Dataset>& datasets,
                  const TrainOptions& options, TrainHooks hooks,
                  const TrainerState* resume) {
  validate_setup(model, datasets, options);
  const std::size_t d_count = model.num_domains();
  const std::size_t total = options.schedule.total_steps;
  const BatchPlan plan = round_robin(d_count, total);

  TrainerState state;
  if (resume != nullptr) {
    state = *resume;
  } else {
    state.optimizer = OptimizerState::create(model, options.optimizer);
    state.iterators.resize(d_count);
    state.loss_sum.assign(d_count, 0.0);
    state.loss_count.assign(d_count, 0);
  }
  if (state.iterators.size() != d_count || state.optimizer.velocity.entries.size() !=
                                               model.bank.entries.size())
    throw CompatibilityError("train: resume state does not match the model");

  std::vector<DomainIterator> iterators;
  iterators.reserve(d_count);
  for (std::size_t d = 0; d < d_count; ++d)
    iterators.emplace_back(datasets[d], d + 1, options.data_seed, state.iterators[d]);

  // Moment accumulation window: the final epoch. Counters reset when the
  // window opens; the window covers the last ceil(train/batch) visits of the
  // largest domain, translated to global steps.
  std::size_t max_bpe = 0;
  for (const Dataset& ds : datasets)
    max_bpe = std::max(max_bpe, (ds.split.train.size() + options.batch_size - 1) /
                                    options.batch_size);
  const std::size_t window_start =
      total > max_bpe * d_count ? total - max_bpe * d_count : 0;

  const auto t0 = std::chrono::steady_clock::now();
  std::vector<MetricsRecord> history;

  auto emit_record = [&](std::size_t completed_steps, bool final_point) {
    MetricsRecord rec;
    rec.step = completed_steps;
    rec.lr = lr_at(options.schedule, completed_steps - 1);
    rec.train_loss.resize(d_count, 0.0);
    for (std::size_t d = 0; d < d_count; ++d)
      rec.train_loss[d] = state.loss_count[d] > 0
                              ? state.loss_sum[d] / static_cast<double>(state.loss_count[d])
                              : 0.0;
    const NormKind kind = model.blueprint.norm.kind;
    EvalNormMode mode;
    if (kind == NormKind::BN)
      mode = final_point ? EvalNormMode::Frozen : EvalNormMode::OnTheFly;
    else if (kind == NormKind::BN_PLUS)
      mode = EvalNormMode::OnTheFly;
    else
      mode = EvalNormMode::Frozen;
    rec.val_error.resize(d_count, 0.0);
    for (std::size_t d = 0; d < d_count; ++d)
      rec.val_error[d] = evaluate(model, datasets[d], d + 1, SplitKind::Val, mode,
                                  options.batch_size);
    rec.mean_error = mean_error(rec.val_error);
    rec.wall_clock_sec =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::fill(state.loss_sum.begin(), state.loss_sum.end(), 0.0);
    std::fill(state.loss_count.begin(), state.loss_count.end(), 0);
    history.push_back(rec);
    if (hooks.on_metrics) hooks.on_metrics(rec);
  };

  auto note_loss = [&](std::size_t step, std::size_t d, float loss) {
    if (!std::isfinite(loss))
      throw DivergenceError("train: non-finite loss at step " + std::to_string(step),
                            step);
    state.loss_sum[d - 1] += static_cast<double>(loss);
    ++state.loss_count[d - 1];
  };

  const unsigned workers =
      options.threads == 0
          ? std::max(1u, std::thread::hardware_concurrency())
          : options.threads;

  std::size_t step = state.step;
  while (step < total) {
    const std::size_t advance =
        options.parallel_accumulation ? std::min(d_count, total - step) : 1;
    if (window_start >= step && window_start < step + advance) reset_moments(model);

    if (!options.parallel_accumulation) {
      const auto [d, visit] = plan.entries[step];
      (void)visit;
      const Batch batch = assemble_batch(
          datasets[d - 1], iterators[d - 1].next(options.batch_size), d,
          model.class_pairing[d - 1], options.augment_seed, step);
      StepOutcome out = run_batch(model, batch, d);
      note_loss(step, d, out.loss);
      if (step >= window_start) accumulate_tape_moments(model, out.tape, d);
      sgd_step(model, out.grads, state.optimizer, lr_at(options.schedule, step));
      state.iterators[d - 1] = iterators[d - 1].state();
      ++step;
    } else {
      // One descent step per round-robin cycle: gradients from the cycle's
      // pure batches are averaged in fixed domain order.
      const std::size_t cycle = std::min(d_count, total - step);
      std::vector<Batch> batches;
      std::vector<std::size_t> batch_domain;
      for (std::size_t i = 0; i < cycle; ++i) {
        const auto [d, visit] = plan.entries[step + i];
        (void)visit;
        batches.push_back(assemble_batch(
            datasets[d - 1], iterators[d - 1].next(options.batch_size), d,
            model.class_pairing[d - 1], options.augment_seed, step + i));
        batch_domain.push_back(d);
        state.iterators[d - 1] = iterators[d - 1].state();
      }
      std::vector<StepOutcome> outcomes(cycle);
      const unsigned pool_size = std::min<unsigned>(workers, cycle);
      if (pool_size <= 1) {
        for (std::size_t i = 0; i < cycle; ++i)
          outcomes[i] = run_batch(model, batches[i], batch_domain[i]);
      } else {
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < pool_size; ++w)
          pool.emplace_back([&, w]() {
            for (std::size_t i = w; i < cycle; i += pool_size)
              outcomes[i] = run_batch(model, batches[i], batch_domain[i]);
          });
        for (auto& th : pool) th.join();
      }
      // Single reducer, ascending domain order.
      GradBank total_grads = make_grad_bank(model);
      const float inv = 1.0f / static_cast<float>(cycle);
      for (std::size_t i = 0; i < cycle; ++i) {
        note_loss(step + i, batch_domain[i], outcomes[i].loss);
        total_grads.axpy(inv, outcomes[i].grads);
      }
      for (std::size_t i = 0; i < cycle; ++i)
        if (step + i >= window_start)
          accumulate_tape_moments(model, outcomes[i].tape, batch_domain[i]);
      sgd_step(model, total_grads, state.optimizer, lr_at(options.schedule, step));
      step += cycle;
    }

    state.step = step;
    const bool final_point = step == total;
    if (final_point || (options.eval_every > 0 && step % options.eval_every == 0))
      emit_record(step, final_point);
    if (hooks.on_checkpoint &&
        (final_point ||
         (options.checkpoint_every > 0 && step % options.checkpoint_every == 0)))
      hooks.on_checkpoint(model, state);
  }

  return TrainResult{std::move(model), std::move(state), std::move(history)};
}

}  // namespace unirep
