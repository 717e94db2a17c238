#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "pixelforge/embed.hpp"
#include "pixelforge/mask.hpp"
#include "pixelforge/raster.hpp"
#include "pixelforge/rng.hpp"

namespace pixelforge {

// Logits are sim * exp(log_scale), i.e. tau = exp(-log_scale).
inline const double kInitialLogScale = std::log(1.0 / 0.07);
// Largest log_scale whose exp() stays at or below 100.
inline const double kMaxLogScale = [] {
  double x = std::log(100.0);
  while (std::exp(x) > 100.0) x = std::nextafter(x, 0.0);
  return x;
}();

struct Temperature {
  double log_scale = kInitialLogScale;

  double scale() const { return std::exp(log_scale); }
  double tau() const { return std::exp(-log_scale); }
  void clamp() {
    if (log_scale > kMaxLogScale) log_scale = kMaxLogScale;
  }
};

// ---- pooling and similarity --------------------------------------------------

struct PooledEmbedding {
  Embedding mean;   // masked average of the feature columns
  Embedding unit;   // L2-normalized copy used for similarities
  double norm = 0.0;
  std::size_t area = 0;
};

// Masked average pooling of z over m. Throws ArgumentError for an empty mask or
// mismatched dims.
PooledEmbedding pool_polygon(const DenseFeatureMap& z, const BinaryMask& m);

// Throws NumericError for a zero vector, ArgumentError for mismatched dims.
double cosine_sim(const Embedding& a, const Embedding& b);

// ---- symmetric InfoNCE ---------------------------------------------------------

struct InfoNceResult {
  double loss = 0.0;
  std::vector<double> grad_p;  // K x D, w.r.t. the unit polygon embeddings
  std::vector<double> grad_e;  // K x D, w.r.t. the unit text embeddings
  double grad_log_scale = 0.0;
};

// Mean of the polygon->text and text->polygon cross-entropies over K matched pairs
// with logits cos(p_i, e_j) * exp(log_scale).
InfoNceResult infonce_symmetric(std::span<const Embedding> p, std::span<const Embedding> e, double log_scale);

// ---- pair sampling -----------------------------------------------------------

inline constexpr std::size_t kDefaultPairCount = 128;

struct SampledPair {
  std::size_t image = 0;
  std::size_t instance = 0;
  CompositionId composition = kEmptyComposition;
};

// Dedups compositions across the minibatch (owner image drawn uniformly among
// the images holding it, then one of its instances there), then draws
// min(k, available) pairs without replacement. `per_image` lists the composition
// ID of each instance of each image.
std::vector<SampledPair> sample_pairs(std::span<const std::vector<CompositionId>> per_image, std::size_t k, Rng& rng);

struct BatchPlan {
  bool feasible = false;
  std::size_t batch_size = 0;
  double probability = 0.0;  // Monte-Carlo estimate at batch_size
};

// Smallest B whose sampled images reach k pairs with at least `confidence`
// probability, estimated from `resamples` seeded draws of B distinct images.
BatchPlan plan_batch_size(std::span<const std::size_t> pair_counts, std::size_t k, double confidence = 0.95,
                          std::uint64_t seed = kDefaultSeed, std::size_t resamples = 10000);

// ---- model and optimizer -----------------------------------------------------

struct AlignModel {
  ToyTextEncoderParams text;
  ToyImageEncoderParams image;
  Temperature temperature;

  static AlignModel random(std::size_t dim, std::size_t hash_dim, std::size_t channels, Rng& rng);

  // Flat layout: text weights, image weights, log_scale.
  std::size_t parameter_count() const { return text.weights.size() + image.weights.size() + 1; }
  std::vector<double> flatten() const;
  void assign(std::span<const double> flat);
  std::size_t log_scale_index() const { return parameter_count() - 1; }
};

struct AdamWConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.98;
  double eps = 1e-6;
  double weight_decay = 0.01;
  double beta_ort = 0.9;
  bool orthogonal = true;
};

struct OptimizerState {
  std::vector<double> m;     // first moment
  std::vector<double> v;     // second moment
  std::vector<double> ema;   // gradient EMA used as the orthogonalization reference
  std::uint64_t step = 0;
  double beta_ort = 0.9;

  explicit OptimizerState(std::size_t n = 0, double beta_ort_ = 0.9)
      : m(n, 0.0), v(n, 0.0), ema(n, 0.0), beta_ort(beta_ort_) {}
};

// Removes the component of g along the gradient EMA (unchanged while the EMA is
// zero), then folds the raw g into the EMA.
std::vector<double> orthogonalize_gradient(std::span<const double> g, OptimizerState& state);

// One AdamW step with decoupled weight decay on params (decay skipped where
// decay_mask is false).
void adamw_update(std::span<double> params, std::span<const double> grad, OptimizerState& state,
                  const AdamWConfig& cfg, const std::vector<bool>& decay_mask);

// ---- contrastive batch, loss and training step -------------------------------

struct ContrastivePair {
  std::size_t image = 0;      // index into ContrastiveBatch::images
  BinaryMask mask;            // at feature resolution
  CompositionId composition_id = kEmptyComposition;
  Composition text;           // possibly sub-sampled composition fed to the text encoder
};

struct ContrastiveBatch {
  std::vector<const Image*> images;
  std::vector<ContrastivePair> pairs;
  std::size_t grid_h = 0;
  std::size_t grid_w = 0;
};

struct LossAndGrad {
  double loss = 0.0;
  std::vector<double> grad;  // flat, AlignModel layout
};

LossAndGrad contrastive_loss(const ContrastiveBatch& batch, const AlignModel& model, bool with_grad = true);

struct StepResult {
  double loss = 0.0;
  double logit_scale = 0.0;
};

// forward -> backward -> orthogonalize (if enabled) -> AdamW -> clamp log_scale.
// Throws NumericError when the loss is not finite.
StepResult train_step(const ContrastiveBatch& batch, AlignModel& model, OptimizerState& opt, const AdamWConfig& cfg);

// ---- verification harness ----------------------------------------------------

struct GradientCheckResult {
  double max_relative_error = 0.0;
  std::size_t worst_index = 0;
  std::size_t checked = 0;
};

// Central differences at `samples` random coordinates (all coordinates when
// samples == 0 or exceeds the size). Relative error is
// |analytic - numeric| / max(|analytic|, |numeric|, floor).
GradientCheckResult gradient_check(const std::function<double(std::span<const double>)>& loss,
                                   std::span<const double> params, std::span<const double> analytic, double epsilon,
                                   std::size_t samples, Rng& rng, double floor = 1e-8);

}  // namespace pixelforge
