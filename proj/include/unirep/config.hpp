#ifndef UNIREP_CONFIG_HPP_
#define UNIREP_CONFIG_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "unirep/blueprint.hpp"
#include "unirep/domains.hpp"
#include "unirep/model.hpp"
#include "unirep/trainer.hpp"

namespace unirep {

struct DomainConfig {
  enum class Type { Synthetic, Udrd };
  Type type = Type::Synthetic;
  SynthSpec synth;          // synthetic domains
  std::string path;         // udrd domains
  bool rgb_replicate = false;
  double split_ratio = 0.8;
};

/// Full declarative description of a run. Defaults follow the desk-scale
/// conventions (batch 32, momentum 0.9, weight decay 1e-4, warm-up 0.01,
/// base 0.1, final 1e-4).
struct ExperimentConfig {
  std::string name = "run";
  std::string output_dir;
  std::uint64_t seed_model = 1;
  std::uint64_t seed_data = 2;
  std::uint64_t seed_augment = 3;

  std::string preset = "desk8";
  std::size_t capacity_multiplier = 1;
  SharingMode sharing_mode = SharingMode::DeepSharing;
  std::size_t partial_first = 1;
  std::size_t partial_last = 1;

  NormStrategy norm;  // bn(domain, domain) unless configured

  double momentum = 0.9;
  double weight_decay = 1e-4;
  std::size_t batch_size = 32;

  std::size_t total_steps = 2000;
  double warmup_fraction = 0.05;
  double warmup_lr = 0.01;
  double base_lr = 0.1;
  double final_lr = 1e-4;
  std::vector<double> decay_boundaries = {0.5, 0.75};

  std::size_t eval_every = 200;
  std::size_t checkpoint_every = 0;
  bool parallel_accumulation = false;
  unsigned threads = 1;

  std::vector<DomainConfig> domains;

  Schedule schedule() const;
  std::vector<std::size_t> class_counts() const;

  /// All constraint violations, empty when the config is valid.
  std::vector<std::string> collect_violations() const;
  void validate() const;  // throws ConfigError with the aggregated report

  /// Canonical key-value rendering with every default materialized;
  /// reparsing it reproduces this config (the run manifest).
  std::string resolved_text() const;
  std::uint64_t hash() const;  // FNV-1a over resolved_text()
};

/// Parses the sectioned key-value format ([experiment], [network],
/// [normalization], [optimizer], [schedule], [training], [domain.N]);
/// unknown keys and every constraint violation are reported together.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config_file(const std::string& path);

// Materialization helpers shared by the CLI and the test suites.
std::vector<Dataset> build_datasets(const ExperimentConfig& config);
Model build_model(const ExperimentConfig& config);
TrainOptions train_options(const ExperimentConfig& config);

}  // namespace unirep

#endif  // UNIREP_CONFIG_HPP_
