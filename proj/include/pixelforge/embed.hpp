#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "pixelforge/rng.hpp"
#include "pixelforge/tags.hpp"

namespace pixelforge {

inline constexpr std::size_t kDefaultEmbeddingDim = 64;
inline constexpr std::size_t kDefaultHashDim = 1024;

struct Embedding {
  std::vector<double> values;

  std::size_t dim() const { return values.size(); }
  bool operator==(const Embedding&) const = default;
};

double l2_norm(std::span<const double> v);
// Throws NumericError for a zero or non-finite vector.
Embedding normalized(std::span<const double> v);

// Dense D x H x W tensor, index (k * H + r) * W + c.
struct DenseFeatureMap {
  std::size_t dim = 0;
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<double> data;

  DenseFeatureMap() = default;
  DenseFeatureMap(std::size_t d, std::size_t h, std::size_t w) : dim(d), height(h), width(w), data(d * h * w, 0.0) {}

  std::size_t cells() const { return height * width; }
  double& at(std::size_t k, std::size_t r, std::size_t c) { return data[(k * height + r) * width + c]; }
  double at(std::size_t k, std::size_t r, std::size_t c) const { return data[(k * height + r) * width + c]; }
  // Channel k at flat cell index.
  double& cell(std::size_t k, std::size_t idx) { return data[k * height * width + idx]; }
  double cell(std::size_t k, std::size_t idx) const { return data[k * height * width + idx]; }
  std::vector<double> vector_at(std::size_t idx) const;

  bool operator==(const DenseFeatureMap&) const = default;
};

// Channels x H x W image with values nominally in [0, 1].
struct Image {
  std::size_t channels = 0;
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<double> data;

  Image() = default;
  Image(std::size_t c, std::size_t h, std::size_t w) : channels(c), height(h), width(w), data(c * h * w, 0.0) {}

  double& at(std::size_t ch, std::size_t r, std::size_t c) { return data[(ch * height + r) * width + c]; }
  double at(std::size_t ch, std::size_t r, std::size_t c) const { return data[(ch * height + r) * width + c]; }
};

// ---- text encoder ------------------------------------------------------------

// Projection W_t (dim x hash_dim, row-major) applied to a signed feature-hashed
// bag of atoms.
struct ToyTextEncoderParams {
  std::size_t dim = kDefaultEmbeddingDim;
  std::size_t hash_dim = kDefaultHashDim;
  std::vector<double> weights;

  static ToyTextEncoderParams random(std::size_t dim, std::size_t hash_dim, Rng& rng);
};

// Sparse hashed representation: (bin, weight) sorted by bin.
struct HashedText {
  std::vector<std::pair<std::uint32_t, double>> entries;
};

// Signed hashing of each atom's rendered form, averaged over atoms. The empty
// composition hashes the token "∅".
HashedText hash_composition(const Composition& c, std::size_t hash_dim);

struct TextForward {
  HashedText hashed;
  Embedding embedding;
  double norm = 0.0;  // pre-normalization norm of W_t h
};

TextForward text_forward(const Composition& c, const ToyTextEncoderParams& p);
Embedding encode_text_toy(const Composition& c, const ToyTextEncoderParams& p);
// Accumulates dL/dW_t into grad (same layout as p.weights).
void text_backward(const TextForward& fwd, std::span<const double> grad_embedding, const ToyTextEncoderParams& p,
                   std::span<double> grad);

// ---- image encoder -----------------------------------------------------------

// Per-cell linear map W_i (dim x (channels + 1), row-major); the last column is a bias.
struct ToyImageEncoderParams {
  std::size_t dim = kDefaultEmbeddingDim;
  std::size_t channels = 3;
  std::vector<double> weights;

  std::size_t inputs() const { return channels + 1; }
  static ToyImageEncoderParams random(std::size_t dim, std::size_t channels, Rng& rng);
};

struct ImageForward {
  DenseFeatureMap features;     // per-cell unit vectors
  std::vector<double> inputs;   // cells x (channels + 1), pooled channel means plus a constant 1
  std::vector<double> norms;    // per-cell pre-normalization norm
};

// Throws ArgumentError unless H % grid_h == 0 and W % grid_w == 0.
ImageForward image_forward(const Image& x, const ToyImageEncoderParams& p, std::size_t grid_h, std::size_t grid_w);
DenseFeatureMap encode_image_toy(const Image& x, const ToyImageEncoderParams& p, std::size_t grid_h, std::size_t grid_w);
// Accumulates dL/dW_i into grad given dL/dz for the per-cell unit features.
void image_backward(const ImageForward& fwd, const DenseFeatureMap& grad_features, const ToyImageEncoderParams& p,
                    std::span<double> grad);

// ---- control adapter ---------------------------------------------------------

// 1x1 convolution (3 x dim weights, row-major) plus bias, followed by a sigmoid.
struct ControlAdapterParams {
  std::size_t dim = kDefaultEmbeddingDim;
  std::vector<double> weights;
  std::array<double, 3> bias{0.0, 0.0, 0.0};

  static ControlAdapterParams zeros(std::size_t dim);
  static ControlAdapterParams random(std::size_t dim, Rng& rng, double scale = 2.0);
};

// 3 x H x W raster in the open interval (0, 1), stored as f32.
struct ControlRaster {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<float> data;

  ControlRaster() = default;
  ControlRaster(std::size_t h, std::size_t w) : height(h), width(w), data(3 * h * w, 0.5f) {}

  float& at(std::size_t ch, std::size_t r, std::size_t c) { return data[(ch * height + r) * width + c]; }
  float at(std::size_t ch, std::size_t r, std::size_t c) const { return data[(ch * height + r) * width + c]; }
  bool operator==(const ControlRaster&) const = default;
};

// Logistic sigmoid narrowed to f32 and kept strictly inside (0, 1).
float open_sigmoid(double x);

// Adapter applied to a single D-vector.
std::array<float, 3> adapter_pixel(std::span<const double> e, const ControlAdapterParams& a);

ControlRaster adapter_forward(const DenseFeatureMap& embeddings, const ControlAdapterParams& a);

}  // namespace pixelforge
