#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "scar/attacks.hpp"
#include "scar/data.hpp"
#include "scar/ssl.hpp"

namespace scar {

struct DatasetConfig {
  std::string generator = "two_moons";  // two_moons | blobs | csv
  size_t n = 2000;
  float noise = 0.2f;
  size_t n_l = 10;
  size_t n_test = 1000;
  int classes = 3;          // blobs
  float spread = 0.08f;     // blobs
  std::string csv_path;     // csv
  std::string csv_test_path;
};

struct ModelConfig {
  std::vector<int64_t> hidden = {64, 64};
  uint64_t seed = 42;
};

// Whole experiment description, parsed from a sectioned key=value file.
// Unknown sections or keys are hard errors. A serialized config re-parses to
// an identical value (the resolved snapshot written into each run dir).
struct ExperimentConfig {
  DatasetConfig dataset;
  ModelConfig model;
  SslMethod method;
  AttackConfig attack;
  TrainConfig train;
  bool reselect_each_epoch = false;
  std::string out_dir = "runs/out";

  void validate() const;
};

ExperimentConfig parse_config_text(const std::string& text, const std::string& origin);
ExperimentConfig parse_config_file(const std::string& path);
std::string serialize_config(const ExperimentConfig& cfg);

// Seed priority: explicit flag > SCAR_SEED environment variable > config
// file. Keeps train.seed in sync with model.seed.
void apply_seed_overrides(ExperimentConfig& cfg, const std::string& flag_seed);

// Accepts "0.05" or "k/255"-style fractions.
float parse_eps(const std::string& text);
std::vector<float> parse_eps_list(const std::string& text);

}  // namespace scar
