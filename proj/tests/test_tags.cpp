#include "doctest.h"
#include "oracles.hpp"
#include "pixelforge/errors.hpp"
#include "pixelforge/tags.hpp"

using namespace pixelforge;

TEST_CASE("parse_tag normalizes") {
  CHECK(parse_tag("Building  Residential").rendered() == "building residential");
  CHECK(parse_tag("amenity").rendered() == "amenity");
  CHECK(parse_tag("shop a,b").value() == "a;b");
  CHECK(parse_tag("name  Main   Street ").rendered() == "name main street");
  CHECK_THROWS_AS(parse_tag("   "), ArgumentError);
  CHECK_THROWS_AS(TagAtom("two words", "x"), ArgumentError);
}

TEST_CASE("make_tag joins whitespace in keys") {
  CHECK(make_tag("Addr City", "Berlin").rendered() == "addr_city berlin");
}

TEST_CASE("composition is sorted and deduplicated") {
  const Composition c = normalize_composition({parse_tag("landuse grass"), parse_tag("building yes"),
                                               parse_tag("landuse grass")});
  REQUIRE(c.size() == 2);
  CHECK(render_sentence(c) == "building yes, landuse grass");
  CHECK(render_sentence(Composition{}).empty());
}

TEST_CASE("sentence round trip") {
  Rng rng(11);
  for (int i = 0; i < 500; ++i) {
    const Composition c = oracle::random_composition(rng, 5);
    CHECK(parse_sentence(render_sentence(c)) == c);
  }
  CHECK(parse_sentence("").empty());
}

TEST_CASE("parent and child split") {
  const auto pc = split_parent_child(parse_tag("building apartments"));
  CHECK(pc.parent == "building");
  CHECK(pc.child == "apartments");
}

TEST_CASE("subsample_tags never empties a nonempty composition") {
  Rng rng(5);
  const Composition c = normalize_composition({parse_tag("a 1"), parse_tag("b 2"), parse_tag("c 3")});
  for (int i = 0; i < 500; ++i) {
    const Composition s = subsample_tags(c, 0.0, rng);
    CHECK(s.size() == 1);
  }
  CHECK(subsample_tags(c, 1.0, rng) == c);
  CHECK(subsample_tags(Composition{}, 0.5, rng).empty());
}

TEST_CASE("rare-tag threshold is inclusive") {
  // 1000 tiles, threshold 0.002: two tiles keep a tag, one tile does not
  const auto v = TagVocabulary::from_counts(1000, {{"building yes", 2}, {"shop kiosk", 1}, {"landuse grass", 900}});
  const auto kept = filter_rare_tags(v);
  CHECK(kept.count(parse_tag("building yes")) == 1);
  CHECK(kept.count(parse_tag("landuse grass")) == 1);
  CHECK(kept.count(parse_tag("shop kiosk")) == 0);
  CHECK_THROWS(filter_rare_tags(TagVocabulary{}));
}

TEST_CASE("vocabulary counts tiles, not occurrences") {
  TagVocabulary v;
  v.add_tile({parse_tag("building yes"), parse_tag("building yes")});
  v.add_tile({parse_tag("building yes"), parse_tag("landuse grass")});
  CHECK(v.total_tiles() == 2);
  CHECK(v.counts().at("building yes") == 2);
  CHECK(v.parents() == std::set<std::string>{"building", "landuse"});
  const auto back = TagVocabulary::from_json(v.to_json());
  CHECK(back.counts() == v.counts());
  CHECK(back.total_tiles() == 2);
}
