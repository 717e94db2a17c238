#include "pixelforge/tags.hpp"

#include <algorithm>
#include <cctype>

#include "json.hpp"

#include "pixelforge/errors.hpp"

namespace pixelforge {
namespace {

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

// Splits on whitespace runs.
std::vector<std::string> tokens(std::string_view s) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && is_space(s[i])) ++i;
    std::size_t j = i;
    while (j < s.size() && !is_space(s[j])) ++j;
    if (j > i) out.emplace_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

std::string join(const std::vector<std::string>& parts, std::size_t from, std::string_view sep) {
  std::string out;
  for (std::size_t i = from; i < parts.size(); ++i) {
    if (i > from) out += sep;
    out += parts[i];
  }
  return out;
}

std::string scrub_commas(std::string s) {
  std::replace(s.begin(), s.end(), ',', ';');
  return s;
}

}  // namespace

TagAtom::TagAtom(std::string key, std::string value) : key_(std::move(key)), value_(std::move(value)) {
  if (key_.empty()) throw ArgumentError("tag key must be nonempty");
  for (char c : key_) {
    if (is_space(c)) throw ArgumentError("tag key contains whitespace: '" + key_ + "'");
  }
}

TagAtom parse_tag(std::string_view text) {
  const auto parts = tokens(scrub_commas(lower(text)));
  if (parts.empty()) throw ArgumentError("cannot parse a tag from blank text");
  return TagAtom(parts[0], join(parts, 1, " "));
}

TagAtom make_tag(std::string_view key, std::string_view value) {
  // Whitespace inside raw keys ("addr street") is folded to '_' so the key stays one token.
  auto key_parts = tokens(scrub_commas(lower(key)));
  if (key_parts.empty()) throw ArgumentError("blank tag key");
  const auto value_parts = tokens(scrub_commas(lower(value)));
  return TagAtom(join(key_parts, 0, "_"), join(value_parts, 0, " "));
}

std::strong_ordering Composition::operator<=>(const Composition& o) const {
  return std::lexicographical_compare_three_way(atoms_.begin(), atoms_.end(), o.atoms_.begin(), o.atoms_.end());
}

Composition normalize_composition(std::vector<TagAtom> atoms) {
  std::sort(atoms.begin(), atoms.end());
  atoms.erase(std::unique(atoms.begin(), atoms.end()), atoms.end());
  Composition c;
  c.atoms_ = std::move(atoms);
  return c;
}

std::string render_sentence(const Composition& c) {
  std::string out;
  for (std::size_t i = 0; i < c.atoms().size(); ++i) {
    if (i > 0) out += ", ";
    out += c.atoms()[i].rendered();
  }
  return out;
}

Composition parse_sentence(std::string_view sentence) {
  std::vector<TagAtom> atoms;
  std::size_t start = 0;
  while (start <= sentence.size()) {
    const std::size_t pos = sentence.find(", ", start);
    const std::string_view piece = sentence.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start);
    if (!tokens(piece).empty()) atoms.push_back(parse_tag(piece));
    if (pos == std::string_view::npos) break;
    start = pos + 2;
  }
  return normalize_composition(std::move(atoms));
}

ParentChild split_parent_child(const TagAtom& a) { return {a.key(), a.value()}; }

Composition subsample_tags(const Composition& c, double keep_prob, Rng& rng) {
  if (!(keep_prob >= 0.0 && keep_prob <= 1.0)) throw ArgumentError("keep_prob must lie in [0, 1]");
  if (c.empty()) return c;
  std::vector<TagAtom> kept;
  for (const auto& a : c.atoms()) {
    if (rng.bernoulli(keep_prob)) kept.push_back(a);
  }
  if (kept.empty()) kept.push_back(c.atoms()[rng.below(c.size())]);
  return normalize_composition(std::move(kept));
}

void TagVocabulary::add_tile(const std::vector<TagAtom>& atoms_in_tile) {
  std::set<std::string> seen;
  for (const auto& a : atoms_in_tile) seen.insert(a.rendered());
  for (const auto& s : seen) ++counts_[s];
  ++total_tiles_;
}

std::set<std::string> TagVocabulary::parents() const {
  std::set<std::string> out;
  for (const auto& [tag, n] : counts_) out.insert(parse_tag(tag).key());
  return out;
}

std::string TagVocabulary::to_json() const {
  nlohmann::ordered_json j;
  j["total_tiles"] = total_tiles_;
  j["counts"] = nlohmann::ordered_json::object();
  for (const auto& [tag, n] : counts_) j["counts"][tag] = n;
  return j.dump(2);
}

TagVocabulary TagVocabulary::from_json(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("vocabulary JSON: ") + e.what());
  }
  if (!j.contains("total_tiles") || !j.contains("counts") || !j["counts"].is_object()) {
    throw DataError("vocabulary JSON needs total_tiles and counts");
  }
  std::map<std::string, std::uint64_t> counts;
  for (const auto& [k, v] : j["counts"].items()) counts[k] = v.get<std::uint64_t>();
  return from_counts(j["total_tiles"].get<std::uint64_t>(), std::move(counts));
}

TagVocabulary TagVocabulary::from_counts(std::uint64_t total_tiles, std::map<std::string, std::uint64_t> counts) {
  for (const auto& [tag, n] : counts) {
    if (n > total_tiles) throw DataError("tag '" + tag + "' counted in more tiles than exist");
  }
  TagVocabulary v;
  v.total_tiles_ = total_tiles;
  v.counts_ = std::move(counts);
  return v;
}

std::set<TagAtom> filter_rare_tags(const TagVocabulary& v, double threshold) {
  if (v.total_tiles() == 0) throw ArgumentError("vocabulary has no tiles");
  std::set<TagAtom> out;
  const auto total = static_cast<double>(v.total_tiles());
  for (const auto& [tag, n] : v.counts()) {
    if (static_cast<double>(n) / total >= threshold) out.insert(parse_tag(tag));
  }
  return out;
}

}  // namespace pixelforge
