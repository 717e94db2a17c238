#include <cstring>

#include "doctest.h"
#include "oracles.hpp"
#include "pixelforge/blob.hpp"
#include "pixelforge/control.hpp"
#include "pixelforge/errors.hpp"
#include "pixelforge/grid_io.hpp"

using namespace pixelforge;

TEST_CASE("grid round trip over random grids") {
  Rng rng(derive_seed(kDefaultSeed, 10));
  for (int i = 0; i < 1000; ++i) {
    const auto w = static_cast<std::uint32_t>(1 + rng.below(48));
    const auto h = static_cast<std::uint32_t>(1 + rng.below(48));
    const CompositionGrid g = oracle::random_grid(rng, w, h, 12);
    const Bytes b = encode_grid(g);
    CHECK(decode_grid(b, g.tile) == g);
    CHECK(encode_grid(decode_grid(b)) == b);
  }
}

TEST_CASE("grid header layout") {
  Rng rng(1);
  const CompositionGrid g = oracle::random_grid(rng, 3, 2, 2);
  const Bytes b = encode_grid(g);
  CHECK(std::string(b.begin(), b.begin() + 4) == "PXFG");
  CHECK(b[4] == 1);
  CHECK(b[5] == 0);
  CHECK(b[6] == 3);
  CHECK(b[10] == 2);
}

TEST_CASE("grid decode errors are typed") {
  Rng rng(2);
  const CompositionGrid g = oracle::random_grid(rng, 4, 4, 3);
  const Bytes good = encode_grid(g);
  auto kind_of = [](const Bytes& b) {
    try {
      decode_grid(b);
    } catch (const GridDecodeError& e) {
      return e.kind();
    }
    FAIL("decode succeeded");
    return GridDecodeErrorKind::BadMagic;
  };
  Bytes bad = good;
  bad[0] = 'X';
  CHECK(kind_of(bad) == GridDecodeErrorKind::BadMagic);
  bad = good;
  bad[4] = 2;
  CHECK(kind_of(bad) == GridDecodeErrorKind::UnknownVersion);
  bad = Bytes(good.begin(), good.end() - 3);
  CHECK(kind_of(bad) == GridDecodeErrorKind::Truncated);
  bad = good;
  bad.push_back(0);
  CHECK(kind_of(bad) == GridDecodeErrorKind::TrailingBytes);
  bad = good;
  // first pixel id -> unknown
  bad[14] = 0xEE;
  CHECK(kind_of(bad) == GridDecodeErrorKind::MissingInternEntry);
}

TEST_CASE("prune_intern keeps only used ids") {
  CompositionGrid g;
  g.width = g.height = 1;
  g.tile = {0, 0, 0, 1, 1};
  g.intern.intern(parse_sentence("a b"));
  const auto used = g.intern.intern(parse_sentence("c d"));
  g.ids = {used};
  const CompositionGrid p = prune_intern(g);
  CHECK(p.intern.contains(used));
  CHECK_FALSE(p.intern.contains(1));
}

TEST_CASE("control raster round trips bit-exactly") {
  Rng rng(derive_seed(kDefaultSeed, 11));
  for (int i = 0; i < 100; ++i) {
    ControlRaster s(1 + rng.below(20), 1 + rng.below(20));
    for (auto& v : s.data) v = open_sigmoid(rng.normal(0.0, 8.0));
    const ControlRaster back = decode_control_raster(encode_control_raster(s));
    REQUIRE(back.height == s.height);
    REQUIRE(back.width == s.width);
    CHECK(std::memcmp(back.data.data(), s.data.data(), s.data.size() * sizeof(float)) == 0);
  }
  CHECK_THROWS(decode_control_raster(Bytes{'P', 'X', 'F', 'G'}));
}

TEST_CASE("blob round trip") {
  Blob b;
  b.meta["name"] = "x";
  b.tensors.push_back({"w", {2, 3}, {1, 2, 3, 4, 5, 6}});
  b.tensors.push_back({"s", {1}, {0.5f}});
  const Blob back = decode_blob(encode_blob(b));
  CHECK(back.meta == b.meta);
  CHECK(back.tensor("w").data == b.tensor("w").data);
  CHECK(back.tensor("w").shape == std::vector<std::size_t>{2, 3});
  CHECK_THROWS(back.tensor("missing"));
}
