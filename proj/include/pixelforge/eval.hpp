#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "pixelforge/embed.hpp"
#include "pixelforge/raster.hpp"
#include "pixelforge/tags.hpp"

namespace pixelforge {

// ---- retrieval ---------------------------------------------------------------

struct RankedCandidate {
  CompositionId id = kEmptyComposition;
  double similarity = 0.0;
};

struct RetrievalResult {
  CompositionId truth = kEmptyComposition;
  std::vector<RankedCandidate> ranking;  // similarity descending, ties by ascending id

  // 1-based rank of the truth; 0 when absent.
  std::size_t truth_rank() const;
};

struct GalleryItem {
  CompositionId id = kEmptyComposition;
  Embedding embedding;
};

RetrievalResult rank_gallery(const Embedding& query, CompositionId truth, std::span<const GalleryItem> gallery);

double recall_at_k(std::span<const RetrievalResult> results, std::size_t k);

using RelevanceFn = std::function<double(CompositionId truth, CompositionId candidate)>;

// Jaccard overlap of the two atom sets; two empty compositions score 1.
double jaccard_relevance(const Composition& a, const Composition& b);

// Linear-gain nDCG@k with 1/log2(rank + 1) discount; queries whose ideal DCG is
// zero score 1.
double semantic_ndcg_at_k(std::span<const RetrievalResult> results, const RelevanceFn& relevance, std::size_t k = 20);

// ---- tag prediction ----------------------------------------------------------

struct TagPrediction {
  Composition predicted;
  Composition truth;
};

struct ParentChildAccuracy {
  double parent = 0.0;
  double child = 0.0;
};

ParentChildAccuracy parent_child_accuracy(std::span<const TagPrediction> predictions);

// Mean of micro-F1 over parent keys and micro-F1 over full atoms.
double mixed_f1(std::span<const TagPrediction> predictions);

// Share of predictions equal to the truth.
double exact_match_at_1(std::span<const TagPrediction> predictions);
// Mean per-prediction atom-level F1.
double tag_overlap_f1_at_1(std::span<const TagPrediction> predictions);

// ---- image quality -----------------------------------------------------------

// Mean SSIM over valid 11x11 Gaussian (sigma 1.5) windows, averaged over channels.
double ssim(const Image& a, const Image& b, double dynamic_range = 255.0);

// 10 log10(peak^2 / MSE); +infinity for identical images.
double psnr(const Image& a, const Image& b, double peak = 255.0);

// ---- Frechet distance --------------------------------------------------------

struct GaussianStats {
  Eigen::VectorXd mean;
  Eigen::MatrixXd covariance;
};

// Sample mean and unbiased covariance of the rows; needs at least two rows.
GaussianStats fit_gaussian(const Eigen::MatrixXd& features);

// ||mu_p - mu_q||^2 + tr(S_p + S_q - 2 (S_p S_q)^(1/2)), with the square root taken
// through the symmetric product S_p^(1/2) S_q S_p^(1/2).
double frechet_distance(const GaussianStats& p, const GaussianStats& q);

// ---- report ------------------------------------------------------------------

struct MetricsReport {
  std::optional<double> recall_1, recall_5, recall_10, ndcg_20;
  std::optional<double> parent_acc, child_acc, mixed_f1;
  std::optional<double> exact_match_1, tag_overlap_f1_1;
  std::optional<double> ssim_mean, psnr_mean, frechet;
  std::size_t queries = 0;
  std::size_t gallery_size = 0;

  std::string to_json() const;
};

}  // namespace pixelforge
