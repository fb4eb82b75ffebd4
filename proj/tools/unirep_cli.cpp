#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>

#include <CLI11.hpp>

#include "unirep/checkpoint.hpp"
#include "unirep/config.hpp"
#include "unirep/error.hpp"
#include "unirep/metrics.hpp"
#include "unirep/verification.hpp"

namespace {

using namespace unirep;

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitConfig = 2;
constexpr int kExitDivergence = 3;
constexpr int kExitIo = 4;

unsigned effective_threads(unsigned configured) {
  if (const char* env = std::getenv("UNIREP_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v > 0) return static_cast<unsigned>(v);
  }
  return configured;
}

void print_errors(const std::vector<std::string>& names,
                  const std::vector<double>& errors) {
  std::cout << std::fixed << std::setprecision(2);
  for (std::size_t d = 0; d < errors.size(); ++d) {
    const std::string label = d < names.size() ? names[d] : "d" + std::to_string(d + 1);
    std::cout << "  " << std::left << std::setw(24) << label << std::right
              << std::setw(8) << errors[d] << "\n";
  }
  std::cout << "  " << std::left << std::setw(24) << "mean" << std::right
            << std::setw(8) << mean_error(errors) << "\n";
  std::cout.unsetf(std::ios::fixed);
}

int cmd_train(const std::string& config_path, const std::string& resume_path) {
  ExperimentConfig config = load_config_file(config_path);
  config.threads = effective_threads(config.threads);
  if (config.output_dir.empty())
    throw ConfigError("train: the config needs output_dir");
  std::filesystem::create_directories(config.output_dir);
  const std::string metrics_path = config.output_dir + "/metrics.jsonl";
  const std::string checkpoint_path = config.output_dir + "/checkpoint.udrc";

  Model model = build_model(config);
  const std::vector<Dataset> datasets = build_datasets(config);
  const TrainOptions options = train_options(config);

  TrainerState resume_state;
  const TrainerState* resume = nullptr;
  if (!resume_path.empty()) {
    CheckpointData ckpt = load_checkpoint(resume_path);
    check_compatibility(ckpt, model, config.hash(), /*resume=*/true);
    model = std::move(ckpt.model);
    resume_state = std::move(ckpt.state);
    resume = &resume_state;
    std::cout << "resuming from step " << resume_state.step << "\n";
  }

  {  // run manifest: the resolved config reproduces this run
    std::ofstream manifest(config.output_dir + "/manifest.ini");
    manifest << config.resolved_text();
  }
  std::ofstream metrics(metrics_path,
                        resume ? std::ios::app : std::ios::trunc);
  if (!metrics) throw IoError("train: cannot write '" + metrics_path + "'");
  if (!resume) metrics << metrics_header_line(config) << "\n" << std::flush;

  TrainHooks hooks;
  hooks.on_metrics = [&](const MetricsRecord& rec) {
    metrics << metrics_record_line(rec) << "\n" << std::flush;
    std::cout << "step " << std::setw(6) << rec.step << "  lr " << std::setw(7)
              << rec.lr << "  mean val err " << std::fixed << std::setprecision(2)
              << rec.mean_error << "  (" << std::setprecision(1) << rec.wall_clock_sec
              << "s)\n";
    std::cout.unsetf(std::ios::fixed);
  };
  hooks.on_checkpoint = [&](const Model& m, const TrainerState& st) {
    save_checkpoint(checkpoint_path, m, st, config.hash());
  };

  const TrainResult result = train(std::move(model), datasets, options, hooks, resume);
  std::ofstream summary(config.output_dir + "/summary.txt");
  MetricsFileData data = read_metrics_file(metrics_path);
  summary << format_report({data});
  if (!result.history.empty())
    summary << "wall clock: " << std::fixed << std::setprecision(1)
            << result.history.back().wall_clock_sec << "s\n";
  std::cout << "final checkpoint: " << checkpoint_path << "\n";
  return kExitOk;
}

int cmd_eval(const std::string& config_path, const std::string& checkpoint_path,
             const std::string& mode, const std::string& split_name) {
  const ExperimentConfig config = load_config_file(config_path);
  const Model expected = build_model(config);
  CheckpointData ckpt = load_checkpoint(checkpoint_path);
  check_compatibility(ckpt, expected, config.hash(), /*resume=*/false);
  const std::vector<Dataset> datasets = build_datasets(config);

  const EvalNormMode norm_mode =
      mode == "bn_plus" ? EvalNormMode::OnTheFly : EvalNormMode::Frozen;
  const SplitKind split = split_name == "train" ? SplitKind::Train : SplitKind::Val;
  std::vector<double> errors;
  std::vector<std::string> names;
  for (std::size_t d = 1; d <= datasets.size(); ++d) {
    errors.push_back(evaluate(ckpt.model, datasets[d - 1], d, split, norm_mode,
                              config.batch_size));
    names.push_back(datasets[d - 1].descriptor.name);
  }
  std::cout << "top-1 error (%), split=" << split_name << ", mode=" << mode << "\n";
  print_errors(names, errors);
  return kExitOk;
}

int cmd_gradcheck(const std::string& preset, double tol, unsigned threads) {
  bool all_pass = true;
  auto show = [&](const LayerCheckResult& r) {
    all_pass &= r.report.pass();
    std::cout << "  " << std::left << std::setw(24) << r.name << (r.report.pass() ? "pass" : "FAIL")
              << "  max rel err " << std::scientific << std::setprecision(2)
              << r.report.max_rel_error << "  (" << r.report.total_slots << " slots)\n";
    std::cout.unsetf(std::ios::scientific);
  };
  std::cout << "gradient oracle, tol " << tol << "\n";
  for (const LayerCheckResult& r : gradcheck_layers(tol, threads)) show(r);
  show(gradcheck_whole_model(preset, tol, threads));
  std::cout << (all_pass ? "all checks passed" : "CHECKS FAILED") << "\n";
  return all_pass ? kExitOk : kExitFailure;
}

int cmd_report(const std::vector<std::string>& files) {
  std::vector<MetricsFileData> runs;
  for (const std::string& f : files) runs.push_back(read_metrics_file(f));
  std::cout << format_report(runs);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"multi-domain training engine"};
  app.require_subcommand(1);

  std::string config_path, resume_path, checkpoint_path;
  std::string mode = "frozen", split_name = "val", preset = "desk8";
  double tol = 1e-3;
  unsigned threads = 2;
  std::vector<std::string> report_files;

  CLI::App* train_cmd = app.add_subcommand("train", "train a model from a config");
  train_cmd->add_option("--config", config_path, "experiment config")->required();
  train_cmd->add_option("--resume", resume_path, "checkpoint to continue from");

  CLI::App* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint");
  eval_cmd->add_option("--config", config_path, "experiment config")->required();
  eval_cmd->add_option("--checkpoint", checkpoint_path, "checkpoint file")->required();
  eval_cmd->add_option("--mode", mode, "frozen|bn_plus")
      ->check(CLI::IsMember({"frozen", "bn_plus"}));
  eval_cmd->add_option("--split", split_name, "val|train")
      ->check(CLI::IsMember({"val", "train"}));

  CLI::App* gradcheck_cmd = app.add_subcommand("gradcheck", "finite-difference oracle");
  gradcheck_cmd->add_option("--preset", preset, "desk8|resnet38");
  gradcheck_cmd->add_option("--tol", tol, "relative error threshold");
  gradcheck_cmd->add_option("--threads", threads, "oracle worker threads");

  CLI::App* report_cmd = app.add_subcommand("report", "format a results table");
  report_cmd->add_option("files", report_files, "metrics files")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (train_cmd->parsed()) return cmd_train(config_path, resume_path);
    if (eval_cmd->parsed()) return cmd_eval(config_path, checkpoint_path, mode, split_name);
    if (gradcheck_cmd->parsed())
      return cmd_gradcheck(preset, tol, effective_threads(threads));
    if (report_cmd->parsed()) return cmd_report(report_files);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const DivergenceError& e) {
    std::cerr << "divergence: " << e.what() << "\n";
    return kExitDivergence;
  } catch (const FormatError& e) {
    std::cerr << "format error: " << e.what() << " (byte " << e.byte_offset() << ")\n";
    return kExitIo;
  } catch (const CompatibilityError& e) {
    std::cerr << "compatibility error: " << e.what() << "\n";
    return kExitIo;
  } catch (const IoError& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return kExitIo;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitFailure;
}
