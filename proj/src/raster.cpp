#include "pixelforge/raster.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace pixelforge {

InternTable::InternTable() {
  by_id_.emplace(kEmptyComposition, Composition{});
  by_comp_.emplace(Composition{}, kEmptyComposition);
}

CompositionId InternTable::intern(const Composition& c) {
  auto it = by_comp_.find(c);
  if (it != by_comp_.end()) return it->second;
  while (by_id_.count(next_) != 0) ++next_;
  const CompositionId id = next_++;
  by_id_.emplace(id, c);
  by_comp_.emplace(c, id);
  return id;
}

void InternTable::insert(CompositionId id, const Composition& c) {
  auto by_id = by_id_.find(id);
  auto by_comp = by_comp_.find(c);
  if (by_id != by_id_.end() || by_comp != by_comp_.end()) {
    if (by_id != by_id_.end() && by_comp != by_comp_.end() && by_comp->second == id) return;
    throw DataError("intern entry " + std::to_string(id) + " ('" + render_sentence(c) + "') conflicts with the table");
  }
  by_id_.emplace(id, c);
  by_comp_.emplace(c, id);
}

const Composition& InternTable::at(CompositionId id) const {
  auto it = by_id_.find(id);
  if (it == by_id_.end()) throw DataError("composition id " + std::to_string(id) + " is not interned");
  return it->second;
}

CompositionId InternTable::id_of(const Composition& c) const {
  auto it = by_comp_.find(c);
  if (it == by_comp_.end()) throw DataError("composition '" + render_sentence(c) + "' is not interned");
  return it->second;
}

void validate(const CompositionGrid& g) {
  if (g.width == 0 || g.height == 0) throw DataError("grid dimensions must be positive");
  if (g.ids.size() != static_cast<std::size_t>(g.width) * g.height) throw DataError("grid payload size mismatch");
  for (auto id : g.ids) {
    if (!g.intern.contains(id)) throw DataError("grid references missing composition id " + std::to_string(id));
  }
}

CompositionGrid composite_tile(std::span<const TaggedPolygon> polygons, const TileSpec& t,
                               const std::set<TagAtom>& retained, InternTable& intern) {
  validate(t);
  const std::size_t n = static_cast<std::size_t>(t.px) * t.py;

  // Polygons covering each pixel, by index into `kept`.
  std::vector<std::vector<std::uint32_t>> cover(n);
  std::vector<std::vector<TagAtom>> kept;
  for (const auto& poly : polygons) {
    std::vector<TagAtom> atoms;
    for (const auto& a : poly.composition.atoms()) {
      if (retained.count(a) != 0) atoms.push_back(a);
    }
    if (atoms.empty()) continue;
    const BinaryMask m = rasterize_polygon(poly.geometry, t);
    const auto idx = static_cast<std::uint32_t>(kept.size());
    bool any = false;
    for (std::size_t i = 0; i < n; ++i) {
      if (m.at(i)) {
        cover[i].push_back(idx);
        any = true;
      }
    }
    if (any) kept.push_back(std::move(atoms));
  }

  CompositionGrid g;
  g.width = t.px;
  g.height = t.py;
  g.tile = t;
  g.ids.assign(n, kEmptyComposition);
  std::map<std::vector<std::uint32_t>, CompositionId> memo;
  for (std::size_t i = 0; i < n; ++i) {
    if (cover[i].empty()) continue;
    auto it = memo.find(cover[i]);
    if (it == memo.end()) {
      std::vector<TagAtom> all;
      for (auto k : cover[i]) all.insert(all.end(), kept[k].begin(), kept[k].end());
      it = memo.emplace(cover[i], intern.intern(normalize_composition(std::move(all)))).first;
    }
    g.ids[i] = it->second;
  }
  for (auto id : g.ids) {
    if (!g.intern.contains(id)) g.intern.insert(id, intern.at(id));
  }
  return g;
}

CompositionGrid composite_tile(std::span<const TaggedPolygon> polygons, const TileSpec& t,
                               const std::set<TagAtom>& retained) {
  InternTable intern;
  return composite_tile(polygons, t, retained, intern);
}

double coverage_fraction(const CompositionGrid& g) {
  if (g.ids.empty()) return 0.0;
  std::size_t labeled = 0;
  for (auto id : g.ids) labeled += (id != kEmptyComposition);
  return static_cast<double>(labeled) / static_cast<double>(g.ids.size());
}

std::vector<PolygonInstance> extract_instances(const CompositionGrid& g) {
  const std::size_t w = g.width, h = g.height;
  std::vector<std::uint8_t> visited(w * h, 0);
  std::vector<PolygonInstance> out;
  std::vector<std::size_t> stack;
  for (std::size_t start = 0; start < w * h; ++start) {
    const CompositionId id = g.ids[start];
    if (id == kEmptyComposition || visited[start]) continue;
    PolygonInstance inst{id, BinaryMask(w, h), 0};
    stack.push_back(start);
    visited[start] = 1;
    while (!stack.empty()) {
      const std::size_t p = stack.back();
      stack.pop_back();
      inst.mask.set_at(p);
      ++inst.pixel_count;
      const std::size_t r = p / w, c = p % w;
      auto visit = [&](std::size_t q) {
        if (!visited[q] && g.ids[q] == id) {
          visited[q] = 1;
          stack.push_back(q);
        }
      };
      if (r > 0) visit(p - w);
      if (r + 1 < h) visit(p + w);
      if (c > 0) visit(p - 1);
      if (c + 1 < w) visit(p + 1);
    }
    out.push_back(std::move(inst));
  }
  return out;
}

namespace {

struct Span1D {
  std::size_t first = 0;
  std::vector<double> weights;  // overlap of source index first+k with the target cell
  double length = 0.0;
};

std::vector<Span1D> box_spans(std::size_t source, std::size_t target) {
  std::vector<Span1D> spans(target);
  const double ratio = static_cast<double>(source) / static_cast<double>(target);
  for (std::size_t i = 0; i < target; ++i) {
    const double a = static_cast<double>(i) * ratio;
    const double b = static_cast<double>(i + 1) * ratio;
    auto first = static_cast<std::size_t>(std::floor(a));
    auto last = std::min(source, static_cast<std::size_t>(std::ceil(b)));
    spans[i].first = first;
    spans[i].length = b - a;
    for (std::size_t s = first; s < last; ++s) {
      const double lo = std::max(a, static_cast<double>(s));
      const double hi = std::min(b, static_cast<double>(s + 1));
      spans[i].weights.push_back(std::max(0.0, hi - lo));
    }
  }
  return spans;
}

}  // namespace

BinaryMask downsample_mask(const BinaryMask& m, std::size_t target_h, std::size_t target_w, double threshold) {
  if (target_h == 0 || target_w == 0) throw ArgumentError("downsample target dimensions must be positive");
  if (target_h > m.height() || target_w > m.width()) throw ArgumentError("downsample target exceeds source dimensions");
  const auto rows = box_spans(m.height(), target_h);
  const auto cols = box_spans(m.width(), target_w);
  BinaryMask out(target_w, target_h);
  bool any_out = false;
  double best = 0.0;
  std::size_t best_index = 0;
  for (std::size_t i = 0; i < target_h; ++i) {
    for (std::size_t j = 0; j < target_w; ++j) {
      double acc = 0.0;
      for (std::size_t a = 0; a < rows[i].weights.size(); ++a) {
        const std::size_t r = rows[i].first + a;
        for (std::size_t b = 0; b < cols[j].weights.size(); ++b) {
          if (m.get(r, cols[j].first + b)) acc += rows[i].weights[a] * cols[j].weights[b];
        }
      }
      const double avg = acc / (rows[i].length * cols[j].length);
      if (avg >= threshold && avg > 0.0) {
        out.set(i, j);
        any_out = true;
      }
      if (avg > best) {
        best = avg;
        best_index = i * target_w + j;
      }
    }
  }
  if (!any_out && best > 0.0) out.set_at(best_index);
  return out;
}

}  // namespace pixelforge
