// podpo: train / eval / diag / grad-check front end.

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "podpo/checkpoint.hpp"
#include "podpo/config.hpp"
#include "podpo/diagnostics.hpp"
#include "podpo/errors.hpp"
#include "podpo/grad_check.hpp"
#include "podpo/metrics.hpp"
#include "podpo/trainer.hpp"

namespace fs = std::filesystem;

namespace {

struct CommonArgs {
  std::string config_path;
  std::vector<std::string> extras;
};

/// Config file (or defaults) plus `--key value` overrides left over by CLI11.
podpo::TrainConfig resolve_config(const CommonArgs& args) {
  podpo::TrainConfig config = args.config_path.empty() ? podpo::TrainConfig{} : podpo::load_config(args.config_path);
  for (std::size_t i = 0; i < args.extras.size(); ++i) {
    std::string key = args.extras[i];
    if (key.rfind("--", 0) != 0) {
      throw podpo::ConfigError(key, "expected --key value");
    }
    key = key.substr(2);
    std::string value;
    if (const auto eq = key.find('='); eq != std::string::npos) {
      value = key.substr(eq + 1);
      key = key.substr(0, eq);
    } else {
      if (i + 1 >= args.extras.size()) {
        throw podpo::ConfigError(key, "missing value");
      }
      value = args.extras[++i];
    }
    std::replace(key.begin(), key.end(), '-', '_');
    podpo::apply_override(config, key, value);
  }
  config.validate();
  return config;
}

std::string output_root(const std::string& flag) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv("PODPO_OUTPUT_ROOT")) return env;
  return "runs";
}

int run_train(const CommonArgs& args, const std::string& out_flag) {
  const podpo::TrainConfig config = resolve_config(args);
  const fs::path dir = output_root(out_flag);
  fs::create_directories(dir);
  {
    std::ofstream snapshot(dir / "config.json");
    snapshot << podpo::to_json_text(config);
  }
  podpo::MetricsWriter metrics((dir / "metrics.csv").string());
  auto state = podpo::make_train_state(config);
  try {
    for (int i = 0; i < config.iterations; ++i) {
      const auto row = podpo::train_iteration(state);
      metrics.append(row);
      if (config.checkpoint_interval > 0 && (i + 1) % config.checkpoint_interval == 0) {
        char name[32];
        std::snprintf(name, sizeof(name), "ckpt_%06d.bin", i + 1);
        podpo::save_checkpoint(state, (dir / name).string());
      }
    }
  } catch (const podpo::NonFiniteError& e) {
    std::cerr << "aborting: " << e.what() << '\n';
    if (state.last_row) {
      std::cerr << "last metrics row:\n" << podpo::metrics_csv_header() << podpo::metrics_csv_line(*state.last_row);
    }
    return 2;
  }
  podpo::save_checkpoint(state, (dir / "final.bin").string());
  std::cout << "wrote " << (dir / "metrics.csv").string() << '\n';
  return 0;
}

int run_eval(const CommonArgs& args, const std::string& checkpoint, int episodes) {
  const auto config = resolve_config(args);
  auto state = podpo::make_train_state(config);
  podpo::load_checkpoint(state, checkpoint);
  const double mean = podpo::evaluate_greedy(state, episodes);
  std::cout << "episodes\t" << episodes << "\nmean_return\t" << mean << '\n';
  return 0;
}

int run_diag(const CommonArgs& args, const std::string& checkpoint, const std::string& report_path, bool strict) {
  const auto config = resolve_config(args);
  podpo::DiagReport report;
  if (!checkpoint.empty()) {
    if (!fs::exists(checkpoint)) {
      throw podpo::CheckpointError("checkpoint not found: " + checkpoint);
    }
    auto state = podpo::make_train_state(config);
    podpo::load_checkpoint(state, checkpoint);
    report = podpo::run_diagnostics(config, &state);
  } else {
    report = podpo::run_diagnostics(config);
  }
  const std::string text = podpo::format_report(report);
  if (report_path.empty()) {
    std::cout << text;
  } else {
    std::ofstream(report_path) << text;
  }
  return strict && !report.all_pass() ? 1 : 0;
}

int run_grad_check(const CommonArgs& args, const std::string& corrupt) {
  const auto config = resolve_config(args);
  podpo::GradCheckOptions options;
  options.seed = config.seed;
  options.corrupt_suite = corrupt;
  const auto results = podpo::run_grad_checks(config, options);
  std::cout << podpo::format_grad_report(results);
  for (const auto& r : results) {
    if (!r.pass) return 1;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Positive-only drifting policy optimization"};
  app.require_subcommand(1);

  CommonArgs train_args, eval_args, diag_args, grad_args;
  std::string out_dir, eval_ckpt, diag_ckpt, diag_report, corrupt;
  int episodes = 100;
  bool strict = false;
  bool no_weighting = false;

  auto* train = app.add_subcommand("train", "Run training, writing config.json, metrics.csv and checkpoints");
  train->add_option("--config", train_args.config_path, "JSON config file");
  train->add_option("--out", out_dir, "Output directory (default: $PODPO_OUTPUT_ROOT or ./runs)");
  train->add_flag("--no-advantage-weighting", no_weighting, "Weight every positive sample by 1");
  train->allow_extras();

  auto* eval = app.add_subcommand("eval", "Greedy rollout of a checkpoint");
  eval->add_option("--config", eval_args.config_path, "JSON config file");
  eval->add_option("--checkpoint", eval_ckpt, "Checkpoint file")->required();
  eval->add_option("--episodes", episodes, "Episodes to average");
  eval->allow_extras();

  auto* diag = app.add_subcommand("diag", "Drifting-field diagnostics report");
  diag->add_option("--config", diag_args.config_path, "JSON config file");
  diag->add_option("--checkpoint", diag_ckpt, "Also diagnose this policy checkpoint");
  diag->add_option("--report", diag_report, "Write the report here instead of stdout");
  diag->add_flag("--strict", strict, "Exit nonzero if any check fails");
  diag->allow_extras();

  auto* grad = app.add_subcommand("grad-check", "Finite-difference gradient suites");
  grad->add_option("--config", grad_args.config_path, "JSON config file");
  grad->add_option("--corrupt", corrupt, "Flip the analytic gradient of one suite (harness self-test)");
  grad->allow_extras();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train) {
      train_args.extras = train->remaining();
      if (no_weighting) {
        train_args.extras.insert(train_args.extras.end(), {"--advantage_weighting", "false"});
      }
      return run_train(train_args, out_dir);
    }
    if (*eval) {
      eval_args.extras = eval->remaining();
      return run_eval(eval_args, eval_ckpt, episodes);
    }
    if (*diag) {
      diag_args.extras = diag->remaining();
      return run_diag(diag_args, diag_ckpt, diag_report, strict);
    }
    if (*grad) {
      grad_args.extras = grad->remaining();
      return run_grad_check(grad_args, corrupt);
    }
  } catch (const podpo::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
