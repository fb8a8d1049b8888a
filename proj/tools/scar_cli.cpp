#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "scar/config.hpp"
#include "scar/errors.hpp"
#include "scar/runner.hpp"

namespace {

scar::ExperimentConfig load_config(const std::string& path, const std::string& out_override,
                                   const std::string& seed_override) {
  scar::ExperimentConfig cfg = scar::parse_config_file(path);
  scar::apply_seed_overrides(cfg, seed_override);
  if (!out_override.empty()) cfg.out_dir = out_override;
  cfg.validate();
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"SCAR: semi-supervised pre-training, robustness-filtered pseudo-label "
               "fine-tuning, and selection trade-off sweeps"};
  app.require_subcommand(1);

  std::string config_path, checkpoint_path, out_override, seed_override, eps_list_str;
  std::vector<std::string> run_dirs;

  auto* pretrain = app.add_subcommand("pretrain", "train a classifier with an SSL objective");
  pretrain->add_option("--config", config_path, "experiment config file")->required();
  pretrain->add_option("--out", out_override, "override output directory");
  pretrain->add_option("--seed", seed_override, "override the config seed");

  auto* scar_cmd = app.add_subcommand("scar", "fine-tune a checkpoint with robust pseudo-labels");
  scar_cmd->add_option("--config", config_path, "experiment config file")->required();
  scar_cmd->add_option("--checkpoint", checkpoint_path, "pretrained checkpoint")->required();
  scar_cmd->add_option("--out", out_override, "override output directory");
  scar_cmd->add_option("--seed", seed_override, "override the config seed");

  auto* tradeoff = app.add_subcommand("tradeoff", "sensitivity/specificity sweep over eps");
  tradeoff->add_option("--config", config_path, "experiment config file")->required();
  tradeoff->add_option("--checkpoint", checkpoint_path, "pretrained checkpoint")->required();
  tradeoff->add_option("--eps-list", eps_list_str, "comma-separated eps values (0.01 or 2/255)")
      ->required();
  tradeoff->add_option("--out", out_override, "override output directory");
  tradeoff->add_option("--seed", seed_override, "override the config seed");

  auto* report = app.add_subcommand("report", "summarize run directories into one table");
  report->add_option("dirs", run_dirs, "run directories")->required();
  report->add_option("--out", out_override, "output directory for report files");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (pretrain->parsed()) {
      scar::cmd_pretrain(load_config(config_path, out_override, seed_override));
    } else if (scar_cmd->parsed()) {
      scar::cmd_scar(load_config(config_path, out_override, seed_override), checkpoint_path);
    } else if (tradeoff->parsed()) {
      scar::cmd_tradeoff(load_config(config_path, out_override, seed_override), checkpoint_path,
                         scar::parse_eps_list(eps_list_str));
    } else if (report->parsed()) {
      scar::cmd_report(run_dirs, out_override.empty() ? "." : out_override);
    }
  } catch (const scar::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const scar::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
