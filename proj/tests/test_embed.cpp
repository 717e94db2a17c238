#include <numeric>

#include "doctest.h"
#include "oracles.hpp"
#include "pixelforge/embed.hpp"
#include "pixelforge/errors.hpp"

using namespace pixelforge;

namespace {

std::vector<double> ranks(const std::vector<double>& x) {
  std::vector<std::size_t> idx(x.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](auto a, auto b) { return x[a] < x[b]; });
  std::vector<double> r(x.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && x[idx[j + 1]] == x[idx[i]]) ++j;
    for (std::size_t k = i; k <= j; ++k) r[idx[k]] = (static_cast<double>(i + j) / 2.0) + 1.0;
    i = j + 1;
  }
  return r;
}

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n, mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

}  // namespace

TEST_CASE("text embeddings are unit length and deterministic") {
  Rng rng(1);
  const auto p = ToyTextEncoderParams::random(64, 1024, rng);
  const Composition c = parse_sentence("building yes, landuse grass");
  const Embedding e = encode_text_toy(c, p);
  CHECK(l2_norm(e.values) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(encode_text_toy(c, p) == e);
  CHECK(l2_norm(encode_text_toy(Composition{}, p).values) == doctest::Approx(1.0));
}

TEST_CASE("shared atoms raise expected text similarity") {
  // 1000 draws of W_t, 200 per overlap level; compositions of n = 4 atoms sharing k of them.
  Rng rng(derive_seed(kDefaultSeed, 20));
  std::vector<double> shared, mean_cos;
  for (std::size_t k = 0; k <= 4; ++k) {
    double total = 0.0;
    for (int draw = 0; draw < 200; ++draw) {
      const auto p = ToyTextEncoderParams::random(64, 1024, rng);
      std::vector<TagAtom> a, b;
      for (std::size_t i = 0; i < 4; ++i) {
        const std::string key = "k" + std::to_string(rng.next_u64() % 1000000);
        a.emplace_back(key, "v");
        b.emplace_back(i < k ? key : "j" + std::to_string(rng.next_u64() % 1000000), "v");
      }
      const Embedding ea = encode_text_toy(normalize_composition(a), p);
      const Embedding eb = encode_text_toy(normalize_composition(b), p);
      for (std::size_t d = 0; d < 64; ++d) total += ea.values[d] * eb.values[d];
    }
    shared.push_back(static_cast<double>(k));
    mean_cos.push_back(total / 200.0);
  }
  CHECK(pearson(ranks(shared), ranks(mean_cos)) > 0.9);
  CHECK(mean_cos.back() == doctest::Approx(1.0));
}

TEST_CASE("constant image gives identical cells; a changed patch changes one cell") {
  Rng rng(4);
  const auto p = ToyImageEncoderParams::random(8, 3, rng);
  Image img(3, 8, 8);
  for (std::size_t ch = 0; ch < 3; ++ch) {
    for (std::size_t i = 0; i < 64; ++i) img.data[ch * 64 + i] = 0.2 + 0.3 * static_cast<double>(ch);
  }
  const DenseFeatureMap z = encode_image_toy(img, p, 4, 4);
  for (std::size_t i = 1; i < z.cells(); ++i) CHECK(z.vector_at(i) == z.vector_at(0));
  Image other = img;
  other.at(0, 7, 7) = 0.9;
  const DenseFeatureMap z2 = encode_image_toy(other, p, 4, 4);
  for (std::size_t i = 0; i < z.cells(); ++i) CHECK((z2.vector_at(i) == z.vector_at(i)) == (i != 15));
}

TEST_CASE("adapter saturation and zero weights") {
  DenseFeatureMap e(4, 2, 2);
  Rng rng(6);
  for (auto& v : e.data) v = rng.normal();
  ControlAdapterParams a = ControlAdapterParams::zeros(4);
  const ControlRaster half = adapter_forward(e, a);
  for (float v : half.data) CHECK(v == 0.5f);
  a.bias = {10.0, -10.0, 0.0};
  const ControlRaster s = adapter_forward(e, a);
  CHECK(s.data[0] == doctest::Approx(1.0).epsilon(1e-4));
  CHECK(s.data[4] == doctest::Approx(0.0).epsilon(1e-4));
  CHECK(s.data[8] == 0.5f);
  CHECK_THROWS_AS(adapter_forward(e, ControlAdapterParams::zeros(5)), ArgumentError);
}

TEST_CASE("image features are per-cell unit vectors") {
  Rng rng(2);
  const auto p = ToyImageEncoderParams::random(16, 3, rng);
  Image img(3, 16, 16);
  for (auto& v : img.data) v = rng.uniform();
  const DenseFeatureMap z = encode_image_toy(img, p, 4, 4);
  CHECK(z.dim == 16);
  for (std::size_t i = 0; i < z.cells(); ++i) CHECK(l2_norm(z.vector_at(i)) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK_THROWS_AS(encode_image_toy(img, p, 5, 5), ArgumentError);
}

TEST_CASE("adapter output stays inside the open unit interval") {
  Rng rng(3);
  auto a = ControlAdapterParams::random(8, rng, 1e6);
  std::vector<double> e(8);
  for (int i = 0; i < 1000; ++i) {
    for (auto& v : e) v = rng.normal();
    for (float s : adapter_pixel(e, a)) {
      CHECK(s > 0.0f);
      CHECK(s < 1.0f);
    }
  }
  CHECK(open_sigmoid(1e9) < 1.0f);
  CHECK(open_sigmoid(-1e9) > 0.0f);
  CHECK(open_sigmoid(0.0) == 0.5f);
}

TEST_CASE("normalized rejects zero vectors") {
  const std::vector<double> z(4, 0.0);
  CHECK_THROWS_AS(normalized(z), NumericError);
}
