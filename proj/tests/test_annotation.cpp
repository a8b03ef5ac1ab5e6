#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numeric>

#include "shotmix/annotation.hpp"
#include "shotmix/error.hpp"

using namespace shotmix;

namespace {

Vocabulary make_vocab(std::size_t n) {
  Vocabulary v;
  for (std::size_t i = 0; i < n; ++i) v.labels.push_back("y" + std::to_string(i));
  return v;
}

SemanticModel random_model(CounterRng& rng, std::size_t vocab, std::size_t dim) {
  SemanticModel m;
  m.feature_dim = dim;
  m.weights.assign(vocab, std::vector<double>(dim));
  m.label_bias.assign(vocab, 0.0);
  for (auto& w : m.weights)
    for (auto& v : w) v = rng.next_gaussian();
  for (auto& b : m.label_bias) b = 0.5 * rng.next_gaussian();
  return m;
}

SourcePool random_pool(CounterRng& rng, std::size_t vocab_size,
                       std::size_t n_sources, double B = 1.0) {
  SourcePool pool;
  pool.vocab = make_vocab(vocab_size);
  pool.offset_bound = B;
  std::vector<double> pi(n_sources);
  double pi_sum = 0.0;
  for (auto& p : pi) pi_sum += (p = 0.05 + rng.next_double());
  for (std::size_t s = 0; s < n_sources; ++s) {
    SourceSpec spec;
    spec.id = "s" + std::to_string(s);
    spec.weight = pi[s] / pi_sum;
    spec.shift = rng.next_gaussian();
    spec.mask.assign(vocab_size, 0);
    spec.offsets.assign(vocab_size, 0.0);
    for (std::size_t y = 0; y < vocab_size; ++y) {
      spec.mask[y] = rng.next_double() < 0.75 ? 1 : 0;
      spec.offsets[y] = B * (2.0 * rng.next_double() - 1.0);
    }
    spec.mask[rng.next_index(vocab_size)] = 1;  // keep at least one exposed
    pool.sources.push_back(std::move(spec));
  }
  return pool;
}

// Direct-summation oracle kept independent of the library softmax path.
std::vector<double> oracle_conditional(const SourceSpec& s,
                                       const SemanticModel& m,
                                       const std::vector<double>& h) {
  std::vector<double> p(s.mask.size(), 0.0);
  double z = 0.0;
  for (std::size_t y = 0; y < s.mask.size(); ++y) {
    if (s.mask[y] == 0) continue;
    double score = m.label_bias.empty() ? 0.0 : m.label_bias[y];
    for (std::size_t k = 0; k < h.size(); ++k) score += m.weights[y][k] * h[k];
    p[y] = std::exp(score + s.offsets[y]);
    z += p[y];
  }
  for (auto& v : p) v /= z;
  return p;
}

}  // namespace

TEST_CASE("source_conditional: symmetric spec yields uniform") {
  SourcePool pool;
  pool.vocab = make_vocab(5);
  SemanticModel m;
  m.feature_dim = 2;
  m.weights.assign(5, {0.3, -0.2});  // identical weights => constant f*
  SourceSpec s;
  s.id = "s";
  s.mask.assign(5, 1);
  s.offsets.assign(5, 0.0);
  s.weight = 1.0;
  std::vector<double> h = {1.0, 2.0};
  auto p = source_conditional(s, m, h);
  for (double v : p) CHECK(v == doctest::Approx(0.2).epsilon(1e-12));
}

TEST_CASE("source_conditional: single unmasked label is a point mass") {
  SemanticModel m;
  m.feature_dim = 1;
  m.weights.assign(3, {1.0});
  SourceSpec s;
  s.mask = {0, 1, 0};
  s.offsets = {0.0, 0.5, 0.0};
  std::vector<double> h = {0.7};
  auto p = source_conditional(s, m, h);
  CHECK(p[0] == 0.0);
  CHECK(p[1] == 1.0);
  CHECK(p[2] == 0.0);
}

TEST_CASE("source_conditional matches the brute-force normalization oracle") {
  CounterRng rng(31);
  for (int rep = 0; rep < 300; ++rep) {
    auto pool = random_pool(rng, 4, 1);
    auto model = random_model(rng, 4, 3);
    std::vector<double> h = {rng.next_gaussian(), rng.next_gaussian(),
                             rng.next_gaussian()};
    auto got = source_conditional(pool.sources[0], model, h);
    auto want = oracle_conditional(pool.sources[0], model, h);
    double sum = 0.0;
    for (std::size_t y = 0; y < 4; ++y) {
      CHECK(std::abs(got[y] - want[y]) <= 1e-12);
      sum += got[y];
    }
    CHECK(std::abs(sum - 1.0) <= 1e-12);
  }
}

TEST_CASE("source_conditional rejects an all-masked spec") {
  SemanticModel m;
  m.feature_dim = 1;
  m.weights.assign(2, {1.0});
  SourceSpec s;
  s.mask = {0, 0};
  s.offsets = {0.0, 0.0};
  std::vector<double> h = {0.0};
  CHECK_THROWS_AS(source_conditional(s, m, h), Error);
}

TEST_CASE("shift invariance: constant added to every label score is absorbed") {
  CounterRng rng(77);
  for (int rep = 0; rep < 100; ++rep) {
    auto pool = random_pool(rng, 5, 2);
    auto model = random_model(rng, 5, 3);
    auto shifted = model;
    const double c = 3.0 * rng.next_gaussian();
    for (auto& b : shifted.label_bias) b += c;
    std::vector<double> h = {rng.next_gaussian(), rng.next_gaussian(),
                             rng.next_gaussian()};
    for (const auto& s : pool.sources) {
      auto p1 = source_conditional(s, model, h);
      auto p2 = source_conditional(s, shifted, h);
      for (std::size_t y = 0; y < 5; ++y) CHECK(std::abs(p1[y] - p2[y]) <= 1e-12);
    }
  }
}

TEST_CASE("pooled_conditional: single source degenerates to its conditional") {
  CounterRng rng(5);
  auto pool = random_pool(rng, 4, 1);
  pool.sources[0].weight = 1.0;
  auto model = random_model(rng, 4, 2);
  std::vector<double> h = {0.4, -1.2};
  auto pooled = pooled_conditional(pool, model, h);
  auto direct = source_conditional(pool.sources[0], model, h);
  for (std::size_t y = 0; y < 4; ++y) CHECK(pooled[y] == doctest::Approx(direct[y]));
}

TEST_CASE("pooled_conditional: equal-weight two-source mixture averages") {
  CounterRng rng(6);
  auto pool = random_pool(rng, 4, 2);
  pool.sources[0].weight = 0.5;
  pool.sources[1].weight = 0.5;
  auto model = random_model(rng, 4, 2);
  std::vector<double> h = {1.0, 0.3};
  auto pooled = pooled_conditional(pool, model, h);
  auto p0 = source_conditional(pool.sources[0], model, h);
  auto p1 = source_conditional(pool.sources[1], model, h);
  for (std::size_t y = 0; y < 4; ++y)
    CHECK(pooled[y] == doctest::Approx(0.5 * p0[y] + 0.5 * p1[y]).epsilon(1e-12));
}

TEST_CASE("pooled_conditional: label masked everywhere has exactly zero mass") {
  CounterRng rng(7);
  auto pool = random_pool(rng, 4, 3);
  for (auto& s : pool.sources) s.mask[2] = 0;
  auto model = random_model(rng, 4, 2);
  std::vector<double> h = {0.1, 0.2};
  auto pooled = pooled_conditional(pool, model, h);
  CHECK(pooled[2] == 0.0);
}

TEST_CASE("pooled_conditional: fuzz sums to one and rejects bad weights") {
  CounterRng rng(8);
  for (int rep = 0; rep < 200; ++rep) {
    auto pool = random_pool(rng, 3 + rng.next_index(5), 1 + rng.next_index(4));
    auto model = random_model(rng, pool.vocab.size(), 2);
    std::vector<double> h = {rng.next_gaussian(), rng.next_gaussian()};
    auto pooled = pooled_conditional(pool, model, h);
    const double sum = std::accumulate(pooled.begin(), pooled.end(), 0.0);
    CHECK(std::abs(sum - 1.0) <= 1e-12);
  }
  auto pool = random_pool(rng, 3, 2);
  auto model = random_model(rng, 3, 2);
  std::vector<double> h = {0.0, 0.0};
  std::vector<double> bad_alpha = {0.7, 0.7};
  CHECK_THROWS_AS(pooled_conditional(pool, model, h, bad_alpha), Error);
}

TEST_CASE("composite_prior: neutral single source has kappa = 0") {
  SourcePool pool;
  pool.vocab = make_vocab(3);
  SourceSpec s;
  s.id = "s0";
  s.mask.assign(3, 1);
  s.offsets.assign(3, 0.0);
  s.shift = 0.0;
  s.weight = 1.0;
  pool.sources.push_back(s);
  auto prior = composite_prior(pool);
  for (std::size_t y = 0; y < 3; ++y) {
    REQUIRE(prior.kappa[y].has_value());
    CHECK(*prior.kappa[y] == doctest::Approx(0.0).epsilon(1e-15));
  }
}

TEST_CASE("composite_prior: label masked by all sources is absent") {
  CounterRng rng(9);
  auto pool = random_pool(rng, 4, 3);
  for (auto& s : pool.sources) {
    s.mask.assign(4, 1);
    s.mask[1] = 0;
  }
  auto prior = composite_prior(pool);
  CHECK(!prior.kappa[1].has_value());
  CHECK(prior.M[1] == 0.0);
  for (std::size_t y : {0u, 2u, 3u}) CHECK(prior.kappa[y].has_value());
}

TEST_CASE("composite_prior matches direct summation") {
  CounterRng rng(10);
  for (int rep = 0; rep < 300; ++rep) {
    auto pool = random_pool(rng, 5, 3);
    auto prior = composite_prior(pool);
    for (std::size_t y = 0; y < 5; ++y) {
      double m = 0.0;
      for (const auto& s : pool.sources)
        if (s.mask[y]) m += s.weight * std::exp(s.offsets[y] - s.shift);
      CHECK(std::abs(prior.M[y] - m) <= 1e-12);
      if (m > 0.0) {
        REQUIRE(prior.kappa[y].has_value());
        CHECK(std::abs(*prior.kappa[y] - std::log(m)) <= 1e-12);
      } else {
        CHECK(!prior.kappa[y].has_value());
      }
    }
  }
}

TEST_CASE("kappa ordering treats absent as smaller than any finite value") {
  CHECK(kappa_less(std::nullopt, -100.0));
  CHECK(!kappa_less(-100.0, std::nullopt));
  CHECK(!kappa_less(std::nullopt, std::nullopt));
  CHECK(kappa_less(-1.0, 2.0));
}

TEST_CASE("sample_dataset: n = 0 and point-mass source") {
  CounterRng rng(12);
  auto pool = random_pool(rng, 3, 1);
  pool.sources[0].weight = 1.0;
  pool.sources[0].mask = {0, 1, 0};
  auto model = random_model(rng, 3, 2);
  auto sampler = gaussian_feature_sampler(2);
  CHECK(sample_dataset(pool, model, 0, sampler, 42).empty());
  auto data = sample_dataset(pool, model, 200, sampler, 42);
  for (const auto& ex : data) CHECK(ex.label == 1);
}

TEST_CASE("sample_dataset: deterministic and index-pure under a seed") {
  CounterRng rng(13);
  auto pool = random_pool(rng, 4, 2);
  auto model = random_model(rng, 4, 2);
  auto sampler = gaussian_feature_sampler(2);
  auto a = sample_dataset(pool, model, 50, sampler, 99);
  auto b = sample_dataset(pool, model, 50, sampler, 99);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].label == b[i].label);
    CHECK(a[i].source == b[i].source);
    CHECK(a[i].features == b[i].features);
  }
}

TEST_CASE("sample_dataset: masked labels never appear for their source") {
  CounterRng rng(14);
  auto pool = random_pool(rng, 5, 3);
  auto model = random_model(rng, 5, 2);
  auto data = sample_dataset(pool, model, 2000, gaussian_feature_sampler(2), 7);
  for (const auto& ex : data)
    CHECK(pool.sources[ex.source].mask[ex.label] == 1);
}

TEST_CASE("sample_dataset: empirical label frequencies track the conditional") {
  // Constant features isolate the label draw so the exact conditional is a
  // closed-form target for the Monte Carlo check.
  CounterRng rng(15);
  auto pool = random_pool(rng, 4, 2);
  SemanticModel model;
  model.feature_dim = 1;
  model.weights.assign(4, {0.0});
  model.label_bias = {0.2, -0.1, 0.4, 0.0};
  FeatureSampler constant = [](CounterRng&) { return std::vector<double>{0.0}; };

  const std::size_t n = 50000;
  auto data = sample_dataset(pool, model, n, constant, 404);
  std::vector<std::vector<double>> counts(
      pool.sources.size(), std::vector<double>(4, 0.0));
  std::vector<double> per_source(pool.sources.size(), 0.0);
  for (const auto& ex : data) {
    counts[ex.source][ex.label] += 1.0;
    per_source[ex.source] += 1.0;
  }
  std::vector<double> h = {0.0};
  for (std::size_t s = 0; s < pool.sources.size(); ++s) {
    auto expect = source_conditional(pool.sources[s], model, h);
    for (std::size_t y = 0; y < 4; ++y)
      CHECK(std::abs(counts[s][y] / per_source[s] - expect[y]) <= 0.01);
  }
}

TEST_CASE("idealized world: normalizer decomposition holds exactly") {
  Vocabulary vocab = make_vocab(5);
  std::vector<std::vector<std::uint8_t>> masks = {{1, 1, 1, 0, 1},
                                                  {1, 0, 1, 1, 1}};
  std::vector<std::vector<double>> offsets = {{0.2, -0.3, 0.0, 0.0, 0.4},
                                              {-0.1, 0.0, 0.3, 0.2, -0.2}};
  auto world = make_idealized_world(vocab, masks, offsets, {0.6, 0.4},
                                    {0.1, 0.5, -0.2, 0.3, 0.0},
                                    {0.7, -0.4}, 1.0);
  CounterRng rng(21);
  for (int rep = 0; rep < 50; ++rep) {
    std::vector<double> h = {rng.next_gaussian(), rng.next_gaussian()};
    const double shared = 0.7 * h[0] - 0.4 * h[1];
    for (const auto& s : world.pool.sources) {
      double z = 0.0;
      for (std::size_t y = 0; y < 5; ++y)
        if (s.mask[y])
          z += std::exp(world.model.score(h, y) + s.offsets[y]);
      CHECK(std::abs(std::log(z) - (s.shift + shared)) <= 1e-10);
    }
  }
}

TEST_CASE("pool JSON round trip preserves masks, offsets, and weights") {
  CounterRng rng(22);
  auto pool = random_pool(rng, 6, 3);
  auto doc = pool_to_json(pool);
  auto back = parse_pool(doc, "rt");
  CHECK(back.vocab.labels == pool.vocab.labels);
  CHECK(back.offset_bound == pool.offset_bound);
  REQUIRE(back.sources.size() == pool.sources.size());
  for (std::size_t s = 0; s < pool.sources.size(); ++s) {
    CHECK(back.sources[s].id == pool.sources[s].id);
    CHECK(back.sources[s].mask == pool.sources[s].mask);
    CHECK(back.sources[s].offsets == pool.sources[s].offsets);
    CHECK(back.sources[s].weight == pool.sources[s].weight);
    CHECK(back.sources[s].shift == pool.sources[s].shift);
  }
}

TEST_CASE("pool validation rejects weight-sum and bound violations") {
  CounterRng rng(23);
  auto pool = random_pool(rng, 4, 2);
  auto broken = pool;
  broken.sources[0].weight += 0.5;
  CHECK_THROWS_AS(broken.validate(), Error);
  broken = pool;
  broken.sources[1].offsets[0] = pool.offset_bound + 1.0;
  CHECK_THROWS_AS(broken.validate(), Error);
  broken = pool;
  broken.sources[0].mask.assign(4, 0);
  CHECK_THROWS_AS(broken.validate(), Error);
}
