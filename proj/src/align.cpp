#include "pixelforge/align.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <string>

#include "pixelforge/errors.hpp"

namespace pixelforge {
namespace {

void require_finite(std::span<const double> v, const char* what) {
  for (double x : v) {
    if (!std::isfinite(x)) throw NumericError(std::string("non-finite value in ") + what);
  }
}

double logsumexp(std::span<const double> v) {
  double mx = -std::numeric_limits<double>::infinity();
  for (double x : v) mx = std::max(mx, x);
  double s = 0.0;
  for (double x : v) s += std::exp(x - mx);
  return mx + std::log(s);
}

}  // namespace

// ---- pooling -----------------------------------------------------------------

PooledEmbedding pool_polygon(const DenseFeatureMap& z, const BinaryMask& m) {
  if (m.height() != z.height || m.width() != z.width) throw ArgumentError("mask dims do not match the feature map");
  PooledEmbedding out;
  out.mean.values.assign(z.dim, 0.0);
  for (std::size_t idx = 0; idx < z.cells(); ++idx) {
    if (!m.at(idx)) continue;
    ++out.area;
    for (std::size_t k = 0; k < z.dim; ++k) out.mean.values[k] += z.cell(k, idx);
  }
  if (out.area == 0) throw ArgumentError("cannot pool over an empty mask");
  const auto area = static_cast<double>(out.area);
  for (auto& v : out.mean.values) v /= area;
  out.norm = l2_norm(out.mean.values);
  out.unit = normalized(out.mean.values);
  return out;
}

double cosine_sim(const Embedding& a, const Embedding& b) {
  if (a.dim() != b.dim()) throw ArgumentError("cosine_sim dimension mismatch");
  const double na = l2_norm(a.values), nb = l2_norm(b.values);
  if (!(na > 0.0) || !(nb > 0.0)) throw NumericError("cosine_sim of a zero vector");
  double dot = 0.0;
  for (std::size_t i = 0; i < a.dim(); ++i) dot += a.values[i] * b.values[i];
  return std::clamp(dot / (na * nb), -1.0, 1.0);
}

// ---- InfoNCE -----------------------------------------------------------------

InfoNceResult infonce_symmetric(std::span<const Embedding> p, std::span<const Embedding> e, double log_scale) {
  const std::size_t k = p.size();
  if (k == 0) throw ArgumentError("InfoNCE needs at least one pair");
  if (e.size() != k) throw ArgumentError("InfoNCE needs as many text as polygon embeddings");
  const std::size_t d = p[0].dim();
  for (std::size_t i = 0; i < k; ++i) {
    if (p[i].dim() != d || e[i].dim() != d) throw ArgumentError("InfoNCE embedding dimension mismatch");
    require_finite(p[i].values, "polygon embeddings");
    require_finite(e[i].values, "text embeddings");
  }
  if (!std::isfinite(log_scale)) throw NumericError("non-finite log_scale");
  const double scale = std::exp(log_scale);

  std::vector<double> sim(k * k), logits(k * k);
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      double s = 0.0;
      for (std::size_t c = 0; c < d; ++c) s += p[i].values[c] * e[j].values[c];
      sim[i * k + j] = s;
      logits[i * k + j] = scale * s;
    }
  }
  std::vector<double> row_lse(k), col_lse(k), column(k);
  for (std::size_t i = 0; i < k; ++i) row_lse[i] = logsumexp(std::span(logits).subspan(i * k, k));
  for (std::size_t j = 0; j < k; ++j) {
    for (std::size_t i = 0; i < k; ++i) column[i] = logits[i * k + j];
    col_lse[j] = logsumexp(column);
  }
  double row_sum = 0.0, col_sum = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    row_sum += row_lse[i] - logits[i * k + i];
    col_sum += col_lse[i] - logits[i * k + i];
  }
  InfoNceResult r;
  const double inv = 1.0 / (2.0 * static_cast<double>(k));
  r.loss = (row_sum + col_sum) * inv;

  // dLoss/dlogit_ij = (softmax_row_ij + softmax_col_ij - 2 delta_ij) / 2K
  r.grad_p.assign(k * d, 0.0);
  r.grad_e.assign(k * d, 0.0);
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      const double l = logits[i * k + j];
      double g = std::exp(l - row_lse[i]) + std::exp(l - col_lse[j]);
      if (i == j) g -= 2.0;
      g *= inv;
      r.grad_log_scale += g * l;
      const double gs = g * scale;
      for (std::size_t c = 0; c < d; ++c) {
        r.grad_p[i * d + c] += gs * e[j].values[c];
        r.grad_e[j * d + c] += gs * p[i].values[c];
      }
    }
  }
  return r;
}

// ---- sampling ----------------------------------------------------------------

std::vector<SampledPair> sample_pairs(std::span<const std::vector<CompositionId>> per_image, std::size_t k, Rng& rng) {
  if (per_image.empty()) throw ArgumentError("sample_pairs needs a nonempty minibatch");
  // composition -> images holding it, ascending
  std::map<CompositionId, std::vector<std::size_t>> owners;
  for (std::size_t img = 0; img < per_image.size(); ++img) {
    for (auto id : per_image[img]) {
      if (id == kEmptyComposition) continue;
      auto& list = owners[id];
      if (list.empty() || list.back() != img) list.push_back(img);
    }
  }
  if (owners.empty()) throw ArgumentError("minibatch holds no polygon instances");

  std::vector<SampledPair> candidates;
  candidates.reserve(owners.size());
  std::vector<std::size_t> local;
  for (const auto& [id, images] : owners) {
    const std::size_t img = images[rng.below(images.size())];
    local.clear();
    for (std::size_t i = 0; i < per_image[img].size(); ++i) {
      if (per_image[img][i] == id) local.push_back(i);
    }
    candidates.push_back({img, local[rng.below(local.size())], id});
  }
  if (candidates.size() <= k) return candidates;
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.below(candidates.size() - i));
    std::swap(candidates[i], candidates[j]);
  }
  candidates.resize(k);
  return candidates;
}

BatchPlan plan_batch_size(std::span<const std::size_t> pair_counts, std::size_t k, double confidence,
                          std::uint64_t seed, std::size_t resamples) {
  if (pair_counts.empty()) throw ArgumentError("plan_batch_size needs a nonempty count distribution");
  if (resamples == 0) throw ArgumentError("plan_batch_size needs at least one resample");
  std::uint64_t total = 0;
  for (auto c : pair_counts) total += c;
  if (total < k) return {false, 0, 0.0};

  const std::size_t n = pair_counts.size();
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  std::vector<std::size_t> swaps;
  for (std::size_t b = 1; b <= n; ++b) {
    Rng rng(derive_seed(seed, b));
    std::size_t hits = 0;
    for (std::size_t s = 0; s < resamples; ++s) {
      swaps.clear();
      std::uint64_t sum = 0;
      for (std::size_t j = 0; j < b; ++j) {
        const std::size_t r = j + static_cast<std::size_t>(rng.below(n - j));
        std::swap(idx[j], idx[r]);
        swaps.push_back(r);
        sum += pair_counts[idx[j]];
      }
      hits += (sum >= k);
      for (std::size_t j = b; j-- > 0;) std::swap(idx[j], idx[swaps[j]]);
    }
    const double prob = static_cast<double>(hits) / static_cast<double>(resamples);
    if (prob >= confidence) return {true, b, prob};
  }
  return {false, 0, 0.0};
}

// ---- model / optimizer -------------------------------------------------------

AlignModel AlignModel::random(std::size_t dim, std::size_t hash_dim, std::size_t channels, Rng& rng) {
  AlignModel m;
  m.text = ToyTextEncoderParams::random(dim, hash_dim, rng);
  m.image = ToyImageEncoderParams::random(dim, channels, rng);
  return m;
}

std::vector<double> AlignModel::flatten() const {
  std::vector<double> flat;
  flat.reserve(parameter_count());
  flat.insert(flat.end(), text.weights.begin(), text.weights.end());
  flat.insert(flat.end(), image.weights.begin(), image.weights.end());
  flat.push_back(temperature.log_scale);
  return flat;
}

void AlignModel::assign(std::span<const double> flat) {
  if (flat.size() != parameter_count()) throw ArgumentError("flat parameter size mismatch");
  auto it = flat.begin();
  std::copy(it, it + static_cast<std::ptrdiff_t>(text.weights.size()), text.weights.begin());
  it += static_cast<std::ptrdiff_t>(text.weights.size());
  std::copy(it, it + static_cast<std::ptrdiff_t>(image.weights.size()), image.weights.begin());
  temperature.log_scale = flat.back();
}

std::vector<double> orthogonalize_gradient(std::span<const double> g, OptimizerState& state) {
  if (state.ema.size() != g.size()) throw ArgumentError("gradient size does not match the optimizer state");
  require_finite(g, "gradient");
  std::vector<double> out(g.begin(), g.end());
  const double mnorm = l2_norm(state.ema);
  if (mnorm > 0.0) {
    double dot = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) dot += g[i] * (state.ema[i] / mnorm);
    for (std::size_t i = 0; i < g.size(); ++i) out[i] -= dot * (state.ema[i] / mnorm);
  }
  for (std::size_t i = 0; i < g.size(); ++i) state.ema[i] = state.beta_ort * state.ema[i] + (1.0 - state.beta_ort) * g[i];
  return out;
}

void adamw_update(std::span<double> params, std::span<const double> grad, OptimizerState& state,
                  const AdamWConfig& cfg, const std::vector<bool>& decay_mask) {
  if (params.size() != grad.size() || state.m.size() != params.size()) {
    throw ArgumentError("AdamW size mismatch");
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double bc1 = 1.0 - std::pow(cfg.beta1, t);
  const double bc2 = 1.0 - std::pow(cfg.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (decay_mask.empty() || decay_mask[i]) params[i] *= 1.0 - cfg.lr * cfg.weight_decay;
    state.m[i] = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * grad[i];
    state.v[i] = cfg.beta2 * state.v[i] + (1.0 - cfg.beta2) * grad[i] * grad[i];
    const double mhat = state.m[i] / bc1;
    const double vhat = state.v[i] / bc2;
    params[i] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
  }
}

// ---- loss --------------------------------------------------------------------

LossAndGrad contrastive_loss(const ContrastiveBatch& batch, const AlignModel& model, bool with_grad) {
  const std::size_t k = batch.pairs.size();
  if (k == 0) throw ArgumentError("contrastive batch is empty");
  const std::size_t d = model.text.dim;
  if (model.image.dim != d) throw ArgumentError("encoder dimensions differ");

  std::map<std::size_t, ImageForward> encoded;
  for (const auto& pair : batch.pairs) {
    if (pair.image >= batch.images.size()) throw ArgumentError("pair references a missing image");
    if (!encoded.count(pair.image)) {
      encoded.emplace(pair.image, image_forward(*batch.images[pair.image], model.image, batch.grid_h, batch.grid_w));
    }
  }

  std::vector<PooledEmbedding> pooled;
  std::vector<TextForward> texts;
  std::vector<Embedding> p, e;
  pooled.reserve(k);
  texts.reserve(k);
  for (const auto& pair : batch.pairs) {
    pooled.push_back(pool_polygon(encoded.at(pair.image).features, pair.mask));
    texts.push_back(text_forward(pair.text, model.text));
    p.push_back(pooled.back().unit);
    e.push_back(texts.back().embedding);
  }
  const InfoNceResult nce = infonce_symmetric(p, e, model.temperature.log_scale);
  LossAndGrad out;
  out.loss = nce.loss;
  if (!with_grad) return out;

  out.grad.assign(model.parameter_count(), 0.0);
  std::span<double> g_text(out.grad.data(), model.text.weights.size());
  std::span<double> g_image(out.grad.data() + model.text.weights.size(), model.image.weights.size());
  out.grad.back() = nce.grad_log_scale;

  std::map<std::size_t, DenseFeatureMap> grad_features;
  for (const auto& [img, fwd] : encoded) grad_features.emplace(img, DenseFeatureMap(d, batch.grid_h, batch.grid_w));

  std::vector<double> gq(d);
  for (std::size_t i = 0; i < k; ++i) {
    // Through the normalization of the pooled vector, then the masked mean.
    const auto& pe = pooled[i];
    const double* gp = nce.grad_p.data() + i * d;
    double dot = 0.0;
    for (std::size_t c = 0; c < d; ++c) dot += pe.unit.values[c] * gp[c];
    const double inv_area = 1.0 / static_cast<double>(pe.area);
    for (std::size_t c = 0; c < d; ++c) gq[c] = (gp[c] - pe.unit.values[c] * dot) / pe.norm * inv_area;
    auto& gz = grad_features.at(batch.pairs[i].image);
    const auto& mask = batch.pairs[i].mask;
    for (std::size_t idx = 0; idx < gz.cells(); ++idx) {
      if (!mask.at(idx)) continue;
      for (std::size_t c = 0; c < d; ++c) gz.cell(c, idx) += gq[c];
    }
    text_backward(texts[i], std::span(nce.grad_e).subspan(i * d, d), model.text, g_text);
  }
  for (const auto& [img, fwd] : encoded) image_backward(fwd, grad_features.at(img), model.image, g_image);
  return out;
}

StepResult train_step(const ContrastiveBatch& batch, AlignModel& model, OptimizerState& opt, const AdamWConfig& cfg) {
  const std::size_t n = model.parameter_count();
  if (opt.m.size() != n) throw ArgumentError("optimizer state does not match the model");
  std::vector<double> flat = model.flatten();
  require_finite(flat, "parameters");

  LossAndGrad lg = contrastive_loss(batch, model, true);
  if (!std::isfinite(lg.loss)) {
    throw NumericError("non-finite loss at step " + std::to_string(opt.step) +
                       " (log_scale=" + std::to_string(model.temperature.log_scale) + ")");
  }
  require_finite(lg.grad, "gradient");
  opt.beta_ort = cfg.beta_ort;
  const std::vector<double> g = cfg.orthogonal ? orthogonalize_gradient(lg.grad, opt) : lg.grad;

  std::vector<bool> decay(n, true);
  decay[model.log_scale_index()] = false;
  adamw_update(flat, g, opt, cfg, decay);
  model.assign(flat);
  model.temperature.clamp();
  return {lg.loss, model.temperature.scale()};
}

// ---- gradient check ----------------------------------------------------------

GradientCheckResult gradient_check(const std::function<double(std::span<const double>)>& loss,
                                   std::span<const double> params, std::span<const double> analytic, double epsilon,
                                   std::size_t samples, Rng& rng, double floor) {
  if (params.size() != analytic.size()) throw ArgumentError("gradient_check size mismatch");
  std::vector<std::size_t> coords;
  if (samples == 0 || samples >= params.size()) {
    coords.resize(params.size());
    for (std::size_t i = 0; i < coords.size(); ++i) coords[i] = i;
  } else {
    auto perm = rng.permutation(params.size());
    coords.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(samples));
  }
  std::vector<double> x(params.begin(), params.end());
  GradientCheckResult r;
  for (auto i : coords) {
    const double orig = x[i];
    x[i] = orig + epsilon;
    const double fp = loss(x);
    x[i] = orig - epsilon;
    const double fm = loss(x);
    x[i] = orig;
    const double numeric = (fp - fm) / (2.0 * epsilon);
    const double denom = std::max({std::abs(analytic[i]), std::abs(numeric), floor});
    const double err = std::abs(analytic[i] - numeric) / denom;
    if (err > r.max_relative_error) {
      r.max_relative_error = err;
      r.worst_index = i;
    }
    ++r.checked;
  }
  return r;
}

}  // namespace pixelforge
