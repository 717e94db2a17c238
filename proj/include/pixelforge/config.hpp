#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "pixelforge/align.hpp"

namespace pixelforge {

// Hyperparameters of the alignment training run, read from "key = value" text.
struct TrainConfig {
  std::size_t d = kDefaultEmbeddingDim;
  std::size_t v_hash = kDefaultHashDim;
  std::size_t grid_h = 64;
  std::size_t grid_w = 64;
  std::size_t k_pairs = kDefaultPairCount;
  std::size_t batch_images = 6;
  double lr = 1e-4;
  double weight_decay = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.98;
  double eps = 1e-6;
  double beta_ort = 0.9;
  bool orthogonal = true;
  std::uint64_t seed = kDefaultSeed;
  std::uint64_t max_steps = 1000;
  double keep_prob = 1.0;

  AdamWConfig optimizer() const;
  // Throws ArgumentError for out-of-range values.
  void validate() const;
};

// Lines are "key = value"; '#' starts a comment. Unknown keys are an error.
TrainConfig parse_train_config(std::string_view text);
TrainConfig load_train_config(const std::filesystem::path& path);
std::string format_train_config(const TrainConfig& c);

}  // namespace pixelforge
