#include "pixelforge/embed.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <string>

#include "pixelforge/errors.hpp"

namespace pixelforge {

double l2_norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

Embedding normalized(std::span<const double> v) {
  const double n = l2_norm(v);
  if (!(n > 0.0) || !std::isfinite(n)) throw NumericError("cannot normalize a zero or non-finite vector");
  Embedding e;
  e.values.reserve(v.size());
  for (double x : v) e.values.push_back(x / n);
  return e;
}

std::vector<double> DenseFeatureMap::vector_at(std::size_t idx) const {
  std::vector<double> v(dim);
  for (std::size_t k = 0; k < dim; ++k) v[k] = cell(k, idx);
  return v;
}

// ---- text --------------------------------------------------------------------

ToyTextEncoderParams ToyTextEncoderParams::random(std::size_t dim, std::size_t hash_dim, Rng& rng) {
  if (dim == 0 || hash_dim == 0) throw ArgumentError("text encoder dims must be positive");
  ToyTextEncoderParams p;
  p.dim = dim;
  p.hash_dim = hash_dim;
  p.weights.resize(dim * hash_dim);
  const double scale = 1.0 / std::sqrt(static_cast<double>(dim));
  for (auto& w : p.weights) w = rng.normal(0.0, scale);
  return p;
}

HashedText hash_composition(const Composition& c, std::size_t hash_dim) {
  if (hash_dim == 0) throw ArgumentError("hash dimension must be positive");
  std::vector<std::string> tokens;
  for (const auto& a : c.atoms()) tokens.push_back(a.rendered());
  if (tokens.empty()) tokens.emplace_back("\xE2\x88\x85");  // U+2205 EMPTY SET
  const double w = 1.0 / static_cast<double>(tokens.size());
  std::map<std::uint32_t, double> bins;
  std::map<std::uint32_t, double> magnitudes;
  for (const auto& t : tokens) {
    const std::uint64_t h = mix64(fnv1a64(t.data(), t.size()));
    const auto bin = static_cast<std::uint32_t>(h % hash_dim);
    const double sign = (h >> 63) != 0 ? -1.0 : 1.0;
    bins[bin] += sign * w;
    magnitudes[bin] += w;
  }
  HashedText out;
  for (const auto& [bin, v] : bins) {
    if (v != 0.0) out.entries.emplace_back(bin, v);
  }
  // Opposite-signed collisions can cancel everything; fall back to unsigned counts.
  if (out.entries.empty()) {
    for (const auto& [bin, v] : magnitudes) out.entries.emplace_back(bin, v);
  }
  return out;
}

TextForward text_forward(const Composition& c, const ToyTextEncoderParams& p) {
  TextForward f;
  f.hashed = hash_composition(c, p.hash_dim);
  std::vector<double> u(p.dim, 0.0);
  for (std::size_t k = 0; k < p.dim; ++k) {
    const double* row = p.weights.data() + k * p.hash_dim;
    double s = 0.0;
    for (const auto& [bin, v] : f.hashed.entries) s += row[bin] * v;
    u[k] = s;
  }
  f.norm = l2_norm(u);
  f.embedding = normalized(u);
  return f;
}

Embedding encode_text_toy(const Composition& c, const ToyTextEncoderParams& p) { return text_forward(c, p).embedding; }

void text_backward(const TextForward& fwd, std::span<const double> grad_embedding, const ToyTextEncoderParams& p,
                   std::span<double> grad) {
  const auto& e = fwd.embedding.values;
  double dot = 0.0;
  for (std::size_t k = 0; k < p.dim; ++k) dot += e[k] * grad_embedding[k];
  for (std::size_t k = 0; k < p.dim; ++k) {
    const double gu = (grad_embedding[k] - e[k] * dot) / fwd.norm;
    double* row = grad.data() + k * p.hash_dim;
    for (const auto& [bin, v] : fwd.hashed.entries) row[bin] += gu * v;
  }
}

// ---- image -------------------------------------------------------------------

ToyImageEncoderParams ToyImageEncoderParams::random(std::size_t dim, std::size_t channels, Rng& rng) {
  if (dim == 0 || channels == 0) throw ArgumentError("image encoder dims must be positive");
  ToyImageEncoderParams p;
  p.dim = dim;
  p.channels = channels;
  p.weights.resize(dim * p.inputs());
  for (auto& w : p.weights) w = rng.normal(0.0, 1.0);
  return p;
}

ImageForward image_forward(const Image& x, const ToyImageEncoderParams& p, std::size_t grid_h, std::size_t grid_w) {
  if (x.channels != p.channels) throw ArgumentError("image channel count does not match the encoder");
  if (grid_h == 0 || grid_w == 0 || x.height % grid_h != 0 || x.width % grid_w != 0) {
    throw ArgumentError("image " + std::to_string(x.height) + "x" + std::to_string(x.width) +
                        " is not divisible into a " + std::to_string(grid_h) + "x" + std::to_string(grid_w) + " grid");
  }
  const std::size_t sh = x.height / grid_h, sw = x.width / grid_w;
  const std::size_t cells = grid_h * grid_w;
  const std::size_t in = p.inputs();
  ImageForward f;
  f.features = DenseFeatureMap(p.dim, grid_h, grid_w);
  f.inputs.assign(cells * in, 0.0);
  f.norms.assign(cells, 0.0);
  const double inv_area = 1.0 / static_cast<double>(sh * sw);
  for (std::size_t gr = 0; gr < grid_h; ++gr) {
    for (std::size_t gc = 0; gc < grid_w; ++gc) {
      const std::size_t cell = gr * grid_w + gc;
      double* xin = f.inputs.data() + cell * in;
      for (std::size_t ch = 0; ch < x.channels; ++ch) {
        double s = 0.0;
        for (std::size_t r = gr * sh; r < (gr + 1) * sh; ++r) {
          for (std::size_t c = gc * sw; c < (gc + 1) * sw; ++c) s += x.at(ch, r, c);
        }
        xin[ch] = s * inv_area;
      }
      xin[x.channels] = 1.0;
      double norm2 = 0.0;
      for (std::size_t k = 0; k < p.dim; ++k) {
        const double* row = p.weights.data() + k * in;
        double v = 0.0;
        for (std::size_t j = 0; j < in; ++j) v += row[j] * xin[j];
        f.features.cell(k, cell) = v;
        norm2 += v * v;
      }
      const double norm = std::sqrt(norm2);
      if (!(norm > 0.0) || !std::isfinite(norm)) throw NumericError("image feature with zero or non-finite norm");
      f.norms[cell] = norm;
      for (std::size_t k = 0; k < p.dim; ++k) f.features.cell(k, cell) /= norm;
    }
  }
  return f;
}

DenseFeatureMap encode_image_toy(const Image& x, const ToyImageEncoderParams& p, std::size_t grid_h,
                                 std::size_t grid_w) {
  return image_forward(x, p, grid_h, grid_w).features;
}

void image_backward(const ImageForward& fwd, const DenseFeatureMap& grad_features, const ToyImageEncoderParams& p,
                    std::span<double> grad) {
  const std::size_t in = p.inputs();
  const auto& z = fwd.features;
  std::vector<double> gv(p.dim);
  for (std::size_t cell = 0; cell < z.cells(); ++cell) {
    double dot = 0.0;
    bool any = false;
    for (std::size_t k = 0; k < p.dim; ++k) {
      const double g = grad_features.cell(k, cell);
      any = any || g != 0.0;
      dot += z.cell(k, cell) * g;
    }
    if (!any) continue;
    const double* xin = fwd.inputs.data() + cell * in;
    for (std::size_t k = 0; k < p.dim; ++k) {
      const double g = (grad_features.cell(k, cell) - z.cell(k, cell) * dot) / fwd.norms[cell];
      double* row = grad.data() + k * in;
      for (std::size_t j = 0; j < in; ++j) row[j] += g * xin[j];
    }
  }
}

// ---- adapter -----------------------------------------------------------------

ControlAdapterParams ControlAdapterParams::zeros(std::size_t dim) {
  ControlAdapterParams a;
  a.dim = dim;
  a.weights.assign(3 * dim, 0.0);
  return a;
}

ControlAdapterParams ControlAdapterParams::random(std::size_t dim, Rng& rng, double scale) {
  ControlAdapterParams a = zeros(dim);
  for (auto& w : a.weights) w = rng.normal(0.0, scale);
  return a;
}

float open_sigmoid(double x) {
  const double s = 1.0 / (1.0 + std::exp(-x));
  constexpr float lo = std::numeric_limits<float>::denorm_min();
  const float hi = std::nextafter(1.0f, 0.0f);
  return std::clamp(static_cast<float>(s), lo, hi);
}

std::array<float, 3> adapter_pixel(std::span<const double> e, const ControlAdapterParams& a) {
  std::array<float, 3> out{};
  for (std::size_t ch = 0; ch < 3; ++ch) {
    double s = a.bias[ch];
    const double* row = a.weights.data() + ch * a.dim;
    for (std::size_t k = 0; k < a.dim; ++k) s += row[k] * e[k];
    out[ch] = open_sigmoid(s);
  }
  return out;
}

ControlRaster adapter_forward(const DenseFeatureMap& embeddings, const ControlAdapterParams& a) {
  if (embeddings.dim != a.dim) throw ArgumentError("adapter expects dim " + std::to_string(a.dim));
  if (a.weights.size() != 3 * a.dim) throw ArgumentError("adapter weights must be 3 x dim");
  ControlRaster s(embeddings.height, embeddings.width);
  std::vector<double> e(a.dim);
  for (std::size_t idx = 0; idx < embeddings.cells(); ++idx) {
    for (std::size_t k = 0; k < a.dim; ++k) e[k] = embeddings.cell(k, idx);
    const auto px = adapter_pixel(e, a);
    for (std::size_t ch = 0; ch < 3; ++ch) s.data[ch * embeddings.cells() + idx] = px[ch];
  }
  return s;
}

}  // namespace pixelforge
