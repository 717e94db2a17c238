#include <algorithm>

#include "doctest.h"
#include "oracles.hpp"
#include "pixelforge/control.hpp"
#include "pixelforge/errors.hpp"

using namespace pixelforge;

TEST_CASE("schedule endpoints are exact") {
  const MaskSchedule s{1000, 1.0, 0.3};
  CHECK(retained_fraction(s, 0) == 1.0);
  CHECK(retained_fraction(s, 1000) == 0.3);
  CHECK(retained_fraction(s, 5000) == 0.3);
  CHECK(retained_fraction(s, 500) == doctest::Approx(0.65));
  double prev = 1.0;
  for (std::uint64_t t = 1; t <= 1000; ++t) {
    const double r = retained_fraction(s, t);
    CHECK(r <= prev);
    prev = r;
  }
}

TEST_CASE("kept instance counts round up") {
  CHECK(kept_instance_count(10, 0.3) == 3);
  CHECK(kept_instance_count(10, 0.31) == 4);
  CHECK(kept_instance_count(7, 0.0) == 0);
  CHECK(kept_instance_count(7, 1.0) == 7);
  CHECK_THROWS_AS(kept_instance_count(7, 1.5), ArgumentError);
}

TEST_CASE("kept sets nest as the retained fraction falls") {
  Rng gen(derive_seed(kDefaultSeed, 40));
  for (int t = 0; t < 200; ++t) {
    const std::size_t n = gen.below(40);
    const std::uint64_t seed = gen.next_u64();
    double r1 = gen.uniform(), r2 = gen.uniform();
    if (r2 > r1) std::swap(r1, r2);
    Rng a(seed), b(seed);
    const auto hi = select_kept_instances(n, r1, a);
    const auto lo = select_kept_instances(n, r2, b);
    CHECK(std::includes(hi.begin(), hi.end(), lo.begin(), lo.end()));
  }
}

TEST_CASE("masking reverts dropped instances to empty") {
  Rng rng(41);
  const CompositionGrid g = oracle::random_grid(rng, 32, 32, 8);
  const auto inst = extract_instances(g);
  Rng r0(1), r1(1);
  const CompositionGrid none = apply_polygon_mask(g, inst, 0.0, r0);
  CHECK(std::all_of(none.ids.begin(), none.ids.end(), [](auto id) { return id == kEmptyComposition; }));
  CHECK(apply_polygon_mask(g, inst, 1.0, r1) == g);
  Rng s1(7), s2(7);
  CHECK(apply_polygon_mask(g, inst, 0.5, s1) == apply_polygon_mask(g, inst, 0.5, s2));
}

TEST_CASE("control raster fast path equals the per-pixel path") {
  Rng rng(42);
  const CompositionGrid g = oracle::random_grid(rng, 16, 12, 6);
  const auto text = ToyTextEncoderParams::random(16, 256, rng);
  const auto adapter = ControlAdapterParams::random(16, rng);
  const auto cache = precompute_text_cache(g.intern, text);
  const ControlRaster slow = build_control_raster(build_embedding_grid(g, cache), adapter);
  CHECK(control_raster_for_grid(g, cache, adapter).data == slow.data);
  CHECK(slow.height == 12);
  CHECK(slow.width == 16);
}

TEST_CASE("missing cache entries name the composition") {
  CompositionGrid g;
  g.width = g.height = 1;
  g.tile = {0, 0, 0, 1, 1};
  g.ids = {g.intern.intern(parse_sentence("building yes"))};
  try {
    build_embedding_grid(g, TextEmbeddingCache{{99, normalized(std::vector<double>{1.0})}});
    FAIL("expected an error");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("building yes") != std::string::npos);
  }
}

TEST_CASE("quantization rounds to 8 bits") {
  ControlRaster s(1, 1);
  s.data = {0.5f, 0.001f, 0.999f};
  CHECK(quantize_control_raster(s) == std::vector<std::uint8_t>{128, 0, 255});
}

TEST_CASE("planted masks are labeled with their composition") {
  // Feature map whose left half points one way and right half another; gallery holds both.
  DenseFeatureMap z(3, 4, 4);
  for (std::size_t r = 0; r < 4; ++r) {
    for (std::size_t c = 0; c < 4; ++c) z.at(c < 2 ? 0 : 1, r, c) = 1.0;
  }
  BinaryMask left(4, 4), right(4, 4), empty(4, 4);
  for (std::size_t r = 0; r < 4; ++r) {
    left.set(r, 0);
    right.set(r, 3);
  }
  const std::vector<GalleryEntry> gallery{{7, normalized(std::vector<double>{0, 1, 0})},
                                          {3, normalized(std::vector<double>{1, 0, 0})},
                                          {9, normalized(std::vector<double>{1, 0, 0})}};
  const std::vector<BinaryMask> masks{left, right, empty};
  const MaskLabeling l = label_masks_by_retrieval(z, masks, gallery);
  REQUIRE(l.labels.size() == 2);
  CHECK(l.labels[0].composition_id == 3);  // tie with 9 resolves to the lower id
  CHECK(l.labels[1].composition_id == 7);
  CHECK(l.skipped == std::vector<std::size_t>{2});
}
