#pragma once

#include "causalnet/config.hpp"
#include "causalnet/flow.hpp"

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace causalnet {

struct ModelConfig {
  int n_classes = 3;
  int feature_dim = 256;
  int encoder_c1 = 16;
  int encoder_c2 = 32;
  int heads = 1;
  double gamma = 0.1;
  int radius = 1;
  int cab_blocks = 1;
  bool residual_norm = true;
  bool shared_cmplm = true;
  int relation_dk = 0;  // 0: use feature_dim
};

struct TrainConfig {
  double learning_rate = 5e-5;
  int epochs = 800;
  int batch_size = 64;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
};

/// Everything needed to reproduce a run besides the data and the seed.
struct ExperimentConfig {
  ModelConfig model;
  TrainConfig train;
  InputOptions input;
  PyramidalLucasKanade::Options flow;
};

/// Ordered (key, value) echo of every setting.
std::vector<std::pair<std::string, std::string>> to_key_values(const ExperimentConfig& cfg);
std::string dump_config(const ExperimentConfig& cfg);

/// Every key of dump_config must be present; unknown keys are rejected.
/// Errors carry the file name and line number.
ExperimentConfig parse_experiment_config(const KeyValueFile& file);
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

/// Throws std::invalid_argument describing the first inconsistent setting.
void validate(const ExperimentConfig& cfg);

/// A small configuration sized for laptop-scale synthetic experiments.
ExperimentConfig desk_scale_config();

}  // namespace causalnet
