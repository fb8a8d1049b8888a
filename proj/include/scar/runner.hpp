#pragma once

#include <string>
#include <vector>

#include "scar/config.hpp"
#include "scar/data.hpp"

namespace scar {

// Everything a run leaves behind. The resolved config snapshot re-runs to
// identical results; wall_seconds is reported on stdout only so output files
// stay byte-reproducible.
struct RunArtifact {
  std::string checkpoint_path;
  std::string metrics_path;
  std::string config_snapshot_path;
  double wall_seconds = 0.0;
};

// Datasets materialized from a config: deterministic per (config, seed).
struct RunData {
  SemiSplit split;
  Dataset test;
};

RunData build_run_data(const ExperimentConfig& cfg);

RunArtifact cmd_pretrain(const ExperimentConfig& cfg);
RunArtifact cmd_scar(const ExperimentConfig& cfg, const std::string& checkpoint_path);
RunArtifact cmd_tradeoff(const ExperimentConfig& cfg, const std::string& checkpoint_path,
                         const std::vector<float>& eps_list);
RunArtifact cmd_report(const std::vector<std::string>& run_dirs, const std::string& out_dir);

}  // namespace scar
