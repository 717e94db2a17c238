#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "pixelforge/rng.hpp"

namespace pixelforge {

// A normalized OSM key/value token, rendered as "key value".
// Keys hold no whitespace. Values are whitespace-collapsed and may hold single
// internal spaces. Commas are rewritten to ';' (the OSM multi-value separator)
// so rendered sentences split unambiguously on ", ".
class TagAtom {
 public:
  TagAtom(std::string key, std::string value);

  const std::string& key() const { return key_; }
  const std::string& value() const { return value_; }
  std::string rendered() const { return value_.empty() ? key_ : key_ + " " + value_; }

  // Ordering by rendered form.
  std::strong_ordering operator<=>(const TagAtom& o) const { return rendered() <=> o.rendered(); }
  bool operator==(const TagAtom& o) const { return key_ == o.key_ && value_ == o.value_; }

 private:
  std::string key_;
  std::string value_;
};

// Throws ArgumentError for blank input.
TagAtom parse_tag(std::string_view text);

// Builds an atom from a raw key/value property pair (e.g. GeoJSON properties).
TagAtom make_tag(std::string_view key, std::string_view value);

// Sorted, deduplicated set of atoms; empty means "unlabeled".
class Composition {
 public:
  Composition() = default;

  const std::vector<TagAtom>& atoms() const { return atoms_; }
  std::size_t size() const { return atoms_.size(); }
  bool empty() const { return atoms_.empty(); }

  bool operator==(const Composition&) const = default;
  std::strong_ordering operator<=>(const Composition& o) const;

 private:
  friend Composition normalize_composition(std::vector<TagAtom> atoms);
  std::vector<TagAtom> atoms_;
};

Composition normalize_composition(std::vector<TagAtom> atoms);

// Atoms joined by ", "; empty composition renders as "".
std::string render_sentence(const Composition& c);
// Inverse of render_sentence.
Composition parse_sentence(std::string_view sentence);

struct ParentChild {
  std::string parent;
  std::string child;
};

ParentChild split_parent_child(const TagAtom& a);

// Keeps each atom independently with probability keep_prob. A nonempty input
// never comes back empty: if every atom was dropped, one uniformly chosen atom
// is retained.
Composition subsample_tags(const Composition& c, double keep_prob, Rng& rng);

// Tile-frequency statistics for rare-tag pruning.
class TagVocabulary {
 public:
  // Counts each distinct atom at most once per tile.
  void add_tile(const std::vector<TagAtom>& atoms_in_tile);

  std::uint64_t total_tiles() const { return total_tiles_; }
  const std::map<std::string, std::uint64_t>& counts() const { return counts_; }
  std::set<std::string> parents() const;

  std::string to_json() const;
  static TagVocabulary from_json(std::string_view text);

  // Direct construction, for tests and for merging counts computed elsewhere.
  static TagVocabulary from_counts(std::uint64_t total_tiles, std::map<std::string, std::uint64_t> counts);

 private:
  std::uint64_t total_tiles_ = 0;
  std::map<std::string, std::uint64_t> counts_;
};

// Retained iff tile_frequency / total >= threshold.
std::set<TagAtom> filter_rare_tags(const TagVocabulary& v, double threshold = 0.002);

}  // namespace pixelforge
