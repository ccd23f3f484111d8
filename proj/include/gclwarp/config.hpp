#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "gclwarp/losses.hpp"

namespace gclwarp {

struct OptimizerSettings {
  double learning_rate = 2e-4;
  double beta1 = 0.5;
  double beta2 = 0.999;
  int batch_size = 8;
};

/// Every knob of data generation, the two networks and training. Loaded from
/// and saved to JSON; unknown keys are rejected, missing keys keep defaults.
struct Config {
  // Data.
  int image_height = 64;
  int image_width = 64;
  int count_train = 500;
  int count_test = 100;
  int count_hard = 100;
  double train_hard_fraction = 0.3;  ///< share of hard pairs in the train split
  std::uint64_t data_seed = 0;
  std::string dataset_root;

  // Stage 1.
  int downscale = 8;  ///< S
  int levels = 2;     ///< L
  std::vector<int> encoder_widths{32, 64, 96};
  double temperature = 0.07;
  int gru_hidden = 64;
  int gru_iterations = 1;
  bool use_global_correspondence = true;
  bool mask_appearance_terms = false;  ///< true restricts warped-garment L1/perceptual to V
  std::int64_t correlation_budget_bytes = std::int64_t{1} << 30;
  std::uint64_t perceptual_seed = 1234;
  LossWeights weights;

  // Stage 2.
  std::vector<int> generator_widths{32, 64, 128};
  int discriminator_width = 32;

  // Training.
  OptimizerSettings optimizer;
  std::uint64_t seed = 0;
  int stage1_steps = 2000;
  int stage2_steps = 2000;
  int log_every = 50;
  int eval_every = 250;
  double val_fraction = 0.1;

  /// Throws std::invalid_argument when an invariant fails (S must divide the
  /// image size, L >= 1, weights non-negative, ...).
  void validate() const;

  std::string to_json() const;
  static Config from_json(const std::string& text);
  static Config load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;
};

}  // namespace gclwarp
