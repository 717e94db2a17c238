#include "doctest.h"
#include "oracles.hpp"
#include "pixelforge/align.hpp"
#include "pixelforge/errors.hpp"

using namespace pixelforge;

namespace {

Embedding unit(std::vector<double> v) { return normalized(v); }

}  // namespace

TEST_CASE("infonce analytic values") {
  const std::vector<Embedding> one{unit({1, 0})};
  CHECK(infonce_symmetric(one, one, kInitialLogScale).loss == 0.0);

  const std::vector<Embedding> same(3, unit({0.3, 0.4, 0.5}));
  CHECK(std::abs(infonce_symmetric(same, same, kInitialLogScale).loss - std::log(3.0)) <= 1e-9);

  const std::vector<Embedding> eye{unit({1, 0}), unit({0, 1})};
  CHECK(std::abs(infonce_symmetric(eye, eye, 0.0).loss - 0.3132616875182228) <= 1e-9);
}

TEST_CASE("infonce matches the direct definition") {
  Rng rng(9);
  for (int t = 0; t < 50; ++t) {
    const std::size_t k = 1 + rng.below(10);
    std::vector<Embedding> p, e;
    for (std::size_t i = 0; i < k; ++i) {
      std::vector<double> a(6), b(6);
      for (auto& v : a) v = rng.normal();
      for (auto& v : b) v = rng.normal();
      p.push_back(unit(a));
      e.push_back(unit(b));
    }
    const double ls = rng.uniform(0.0, kMaxLogScale);
    CHECK(infonce_symmetric(p, e, ls).loss == doctest::Approx(oracle::direct_infonce(p, e, ls)).epsilon(1e-10));
  }
}

TEST_CASE("pooling equals the naive masked mean bitwise") {
  Rng rng(derive_seed(kDefaultSeed, 30));
  for (int t = 0; t < 100; ++t) {
    DenseFeatureMap z(1 + rng.below(8), 16, 16);
    for (auto& v : z.data) v = rng.normal();
    BinaryMask m(16, 16);
    for (std::size_t i = 0; i < m.size(); ++i) m.set_at(i, rng.bernoulli(0.3));
    m.set_at(rng.below(m.size()));
    CHECK(pool_polygon(z, m).mean.values == oracle::naive_pool(z, m));
  }
  CHECK_THROWS_AS(pool_polygon(DenseFeatureMap(2, 4, 4), BinaryMask(4, 4)), ArgumentError);
}

TEST_CASE("analytic gradients match central differences") {
  Rng rng(derive_seed(kDefaultSeed, 31));
  for (int t = 0; t < 5; ++t) {
    auto rb = oracle::random_batch(rng, 8);
    AlignModel model = AlignModel::random(8, 64, 3, rng);
    model.temperature.log_scale = rng.uniform(0.5, 3.0);
    const LossAndGrad lg = contrastive_loss(rb.batch, model);
    const auto params = model.flatten();
    auto loss = [&](std::span<const double> flat) {
      AlignModel m = model;
      m.assign(flat);
      return contrastive_loss(rb.batch, m, false).loss;
    };
    const auto r = gradient_check(loss, params, lg.grad, 1e-6, 0, rng, 1e-6);
    CHECK(r.max_relative_error <= 1e-4);
  }
}

TEST_CASE("orthogonalized gradient is orthogonal to the EMA") {
  Rng rng(12);
  OptimizerState st(50, 0.9);
  for (int t = 0; t < 100; ++t) {
    std::vector<double> g(50);
    for (auto& v : g) v = rng.normal();
    const std::vector<double> ema = st.ema;
    const auto o = orthogonalize_gradient(g, st);
    double dot = 0.0, en = 0.0, gn = 0.0;
    for (std::size_t i = 0; i < 50; ++i) {
      dot += o[i] * ema[i];
      en += ema[i] * ema[i];
      gn += g[i] * g[i];
    }
    if (t == 0) CHECK(o == g);
    if (en > 0) CHECK(std::abs(dot) / std::sqrt(en) <= 1e-10 * std::sqrt(gn));
  }
}

TEST_CASE("adamw matches a hand-computed first step") {
  std::vector<double> p{1.0, -2.0};
  const std::vector<double> g{0.5, -0.25};
  OptimizerState st(2);
  AdamWConfig cfg;
  adamw_update(p, g, st, cfg, {true, false});
  // first step: m_hat = g, v_hat = g^2 -> update = lr * g / (|g| + eps)
  CHECK(p[0] == doctest::Approx(1.0 - 1e-4 * 0.01 * 1.0 - 1e-4 * 0.5 / (0.5 + 1e-6)).epsilon(1e-14));
  CHECK(p[1] == doctest::Approx(-2.0 + 1e-4 * 0.25 / (0.25 + 1e-6)).epsilon(1e-14));
}

TEST_CASE("training clamps the logit scale and lowers the loss on a fixed batch") {
  Rng rng(derive_seed(kDefaultSeed, 32));
  auto rb = oracle::random_batch(rng, 8);
  AlignModel model = AlignModel::random(8, 64, 3, rng);
  OptimizerState st(model.parameter_count());
  AdamWConfig cfg;
  cfg.lr = 1e-2;
  const double first = train_step(rb.batch, model, st, cfg).loss;
  double last = first;
  for (int i = 0; i < 199; ++i) {
    last = train_step(rb.batch, model, st, cfg).loss;
    CHECK(std::exp(model.temperature.log_scale) <= 100.0);
  }
  CHECK(last < first);

  model.temperature.log_scale = 50.0;
  train_step(rb.batch, model, st, cfg);
  CHECK(model.temperature.log_scale == kMaxLogScale);
  CHECK(std::exp(kMaxLogScale) <= 100.0);
}

TEST_CASE("sample_pairs dedupes compositions and returns everything when short") {
  Rng rng(13);
  std::vector<std::vector<CompositionId>> per_image{{1, 2, 3, 1}, {2, 4}, {5}};
  const auto pairs = sample_pairs(per_image, 128, rng);
  std::set<CompositionId> ids;
  for (const auto& p : pairs) {
    ids.insert(p.composition);
    CHECK(per_image[p.image][p.instance] == p.composition);
  }
  CHECK(pairs.size() == 5);
  CHECK(ids.size() == 5);

  std::vector<std::vector<CompositionId>> forty(4);
  for (CompositionId i = 0; i < 40; ++i) forty[i % 4].push_back(i + 1);
  CHECK(sample_pairs(forty, 128, rng).size() == 40);
  CHECK(sample_pairs(forty, 10, rng).size() == 10);
}

TEST_CASE("plan_batch_size") {
  const std::vector<std::size_t> counts(100, 32);
  const auto plan = plan_batch_size(counts, 128);
  CHECK(plan.feasible);
  CHECK(plan.batch_size == 4);
  CHECK(plan.probability == 1.0);
  const std::vector<std::size_t> few(3, 10);
  CHECK_FALSE(plan_batch_size(few, 128).feasible);
}

TEST_CASE("training is deterministic") {
  auto run = [] {
    Rng rng(derive_seed(kDefaultSeed, 33));
    auto rb = oracle::random_batch(rng, 6);
    AlignModel model = AlignModel::random(8, 64, 3, rng);
    OptimizerState st(model.parameter_count());
    double loss = 0.0;
    for (int i = 0; i < 20; ++i) loss = train_step(rb.batch, model, st, AdamWConfig{}).loss;
    return std::pair{loss, model.flatten()};
  };
  CHECK(run() == run());
}
