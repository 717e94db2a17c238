#include "pixelforge/control.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <spdlog/spdlog.h>

#include "pixelforge/errors.hpp"

namespace pixelforge {

TextEmbeddingCache precompute_text_cache(const InternTable& intern, const ToyTextEncoderParams& text) {
  TextEmbeddingCache cache;
  for (const auto& [id, comp] : intern.entries()) cache.emplace(id, encode_text_toy(comp, text));
  return cache;
}

namespace {

const Embedding& lookup(const CompositionGrid& g, const TextEmbeddingCache& cache, CompositionId id) {
  auto it = cache.find(id);
  if (it == cache.end()) {
    const std::string sentence = g.intern.contains(id) ? render_sentence(g.intern.at(id)) : std::string("?");
    throw DataError("text-embedding cache has no entry for composition " + std::to_string(id) + " ('" + sentence + "')");
  }
  return it->second;
}

std::size_t cache_dim(const TextEmbeddingCache& cache) {
  if (cache.empty()) throw DataError("text-embedding cache is empty");
  return cache.begin()->second.dim();
}

}  // namespace

SemanticEmbeddingGrid build_embedding_grid(const CompositionGrid& g, const TextEmbeddingCache& cache) {
  const std::size_t d = cache_dim(cache);
  SemanticEmbeddingGrid out{DenseFeatureMap(d, g.height, g.width), g.tile};
  for (std::size_t idx = 0; idx < g.ids.size(); ++idx) {
    const Embedding& e = lookup(g, cache, g.ids[idx]);
    if (e.dim() != d) throw DataError("text-embedding cache holds mixed dimensions");
    for (std::size_t k = 0; k < d; ++k) out.values.cell(k, idx) = e.values[k];
  }
  return out;
}

ControlRaster build_control_raster(const SemanticEmbeddingGrid& e, const ControlAdapterParams& a) {
  return adapter_forward(e.values, a);
}

ControlRaster control_raster_for_grid(const CompositionGrid& g, const TextEmbeddingCache& cache,
                                      const ControlAdapterParams& a) {
  if (cache_dim(cache) != a.dim) throw ArgumentError("adapter dim does not match the cache");
  std::map<CompositionId, std::array<float, 3>> colors;
  ControlRaster s(g.height, g.width);
  const std::size_t n = g.ids.size();
  for (std::size_t idx = 0; idx < n; ++idx) {
    const CompositionId id = g.ids[idx];
    auto it = colors.find(id);
    if (it == colors.end()) it = colors.emplace(id, adapter_pixel(lookup(g, cache, id).values, a)).first;
    for (std::size_t ch = 0; ch < 3; ++ch) s.data[ch * n + idx] = it->second[ch];
  }
  return s;
}

double retained_fraction(const MaskSchedule& sched, std::uint64_t step) {
  if (!(sched.end_retained >= 0.0 && sched.end_retained <= sched.start_retained && sched.start_retained <= 1.0)) {
    throw ArgumentError("mask schedule needs 0 <= end <= start <= 1");
  }
  if (sched.total_steps == 0) throw ArgumentError("mask schedule needs total_steps > 0");
  if (step > sched.total_steps) {
    spdlog::warn("schedule step {} beyond total {}; clamped", step, sched.total_steps);
    step = sched.total_steps;
  }
  const double f = static_cast<double>(step) / static_cast<double>(sched.total_steps);
  return std::lerp(sched.start_retained, sched.end_retained, f);
}

std::size_t kept_instance_count(std::size_t n, double retained) {
  if (!(retained >= 0.0 && retained <= 1.0)) throw ArgumentError("retained fraction must lie in [0, 1]");
  const double x = retained * static_cast<double>(n);
  const double nearest = std::round(x);
  const double snapped = std::abs(x - nearest) < 1e-9 ? nearest : x;
  return std::min(n, static_cast<std::size_t>(std::ceil(snapped)));
}

std::vector<std::size_t> select_kept_instances(std::size_t n, double retained, Rng& rng) {
  const std::size_t keep = kept_instance_count(n, retained);
  auto perm = rng.permutation(n);
  perm.resize(keep);
  std::sort(perm.begin(), perm.end());
  return perm;
}

CompositionGrid apply_polygon_mask(const CompositionGrid& g, std::span<const PolygonInstance> instances,
                                   double retained, Rng& rng) {
  const auto kept = select_kept_instances(instances.size(), retained, rng);
  CompositionGrid out = g;
  std::vector<bool> keep(instances.size(), false);
  for (auto i : kept) keep[i] = true;
  for (std::size_t i = 0; i < instances.size(); ++i) {
    if (keep[i]) continue;
    const auto& m = instances[i].mask;
    if (m.size() != out.ids.size()) throw ArgumentError("instance mask does not match the grid");
    for (std::size_t idx = 0; idx < m.size(); ++idx) {
      if (m.at(idx)) out.ids[idx] = kEmptyComposition;
    }
  }
  return out;
}

MaskLabeling label_masks_by_retrieval(const DenseFeatureMap& z, std::span<const BinaryMask> masks,
                                      std::span<const GalleryEntry> gallery) {
  if (gallery.empty()) throw ArgumentError("retrieval gallery is empty");
  MaskLabeling out;
  for (std::size_t i = 0; i < masks.size(); ++i) {
    if (mask_area(masks[i]) == 0) {
      spdlog::warn("mask {} is empty; skipped", i);
      out.skipped.push_back(i);
      continue;
    }
    const PooledEmbedding p = pool_polygon(z, masks[i]);
    MaskLabel best{i, gallery[0].id, -2.0};
    for (const auto& g : gallery) {
      const double s = cosine_sim(p.unit, g.embedding);
      if (s > best.similarity || (s == best.similarity && g.id < best.composition_id)) {
        best.similarity = s;
        best.composition_id = g.id;
      }
    }
    out.labels.push_back(best);
  }
  return out;
}

Bytes encode_control_raster(const ControlRaster& s) {
  if (s.data.size() != 3 * s.height * s.width) throw ArgumentError("control raster size mismatch");
  ByteWriter w;
  w.put_bytes("PXFC");
  w.put_u16(1);
  w.put_u32(3);
  w.put_u32(static_cast<std::uint32_t>(s.height));
  w.put_u32(static_cast<std::uint32_t>(s.width));
  for (float v : s.data) w.put_f32(v);
  return w.take();
}

ControlRaster decode_control_raster(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  std::string magic;
  std::uint16_t version = 0;
  std::uint32_t c = 0, h = 0, w = 0;
  if (!r.get_bytes(4, magic) || magic != "PXFC") throw DataError("not a PXFC control raster");
  if (!r.get_u16(version) || version != 1) throw DataError("unsupported PXFC version");
  if (!r.get_u32(c) || !r.get_u32(h) || !r.get_u32(w)) throw DataError("PXFC header truncated");
  if (c != 3) throw DataError("PXFC raster must have 3 channels");
  const std::uint64_t n = 3ULL * h * w;
  if (r.remaining() != n * 4) throw DataError("PXFC payload size mismatch");
  ControlRaster s(h, w);
  for (auto& v : s.data) r.get_f32(v);
  return s;
}

std::vector<std::uint8_t> quantize_control_raster(const ControlRaster& s) {
  std::vector<std::uint8_t> out(s.data.size());
  for (std::size_t i = 0; i < s.data.size(); ++i) {
    out[i] = static_cast<std::uint8_t>(std::clamp(std::lround(255.0 * s.data[i]), 0L, 255L));
  }
  return out;
}

}  // namespace pixelforge
