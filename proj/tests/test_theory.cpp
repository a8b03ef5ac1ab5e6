#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "shotmix/error.hpp"
#include "shotmix/theory.hpp"

using namespace shotmix;

namespace {

Vocabulary make_vocab(std::size_t n) {
  Vocabulary v;
  for (std::size_t i = 0; i < n; ++i) v.labels.push_back("y" + std::to_string(i));
  return v;
}

IdealizedWorld small_idealized() {
  return make_idealized_world(
      make_vocab(5), {{1, 1, 1, 0, 1}, {1, 0, 1, 1, 1}},
      {{0.2, -0.3, 0.0, 0.1, 0.4}, {-0.1, 0.0, 0.3, 0.2, -0.2}}, {0.6, 0.4},
      {0.1, 0.5, -0.2, 0.3, 0.0}, {0.7, -0.4}, 1.0);
}

std::vector<std::vector<double>> gaussian_h(CounterRng& rng, int count,
                                            std::size_t dim) {
  std::vector<std::vector<double>> h(static_cast<std::size_t>(count));
  for (auto& v : h) {
    v.resize(dim);
    for (auto& x : v) x = rng.next_gaussian();
  }
  return h;
}

SourcePool uniform_pool(std::size_t labels, std::size_t sources) {
  SourcePool pool;
  pool.vocab = make_vocab(labels);
  pool.offset_bound = 1.0;
  for (std::size_t s = 0; s < sources; ++s) {
    SourceSpec spec;
    spec.id = "s" + std::to_string(s);
    spec.weight = 1.0 / static_cast<double>(sources);
    spec.mask.assign(labels, 1);
    spec.offsets.assign(labels, 0.0);
    pool.sources.push_back(std::move(spec));
  }
  return pool;
}

}  // namespace

TEST_CASE("dominant prior: idealized two-source pool is exact") {
  auto world = small_idealized();
  CounterRng rng(1);
  auto h = gaussian_h(rng, 50, world.model.feature_dim);
  auto report = check_dominant_prior(world, h);
  CHECK(report.max_total_variation <= 1e-10);
  CHECK(report.pass);
}

TEST_CASE("dominant prior: single source reduces to the source conditional") {
  auto world = make_idealized_world(make_vocab(4), {{1, 1, 0, 1}},
                                    {{0.3, -0.2, 0.0, 0.5}}, {1.0},
                                    {0.2, -0.1, 0.4, 0.0}, {0.5, 0.25}, 1.0);
  CounterRng rng(2);
  auto h = gaussian_h(rng, 30, 2);
  auto report = check_dominant_prior(world, h);
  CHECK(report.max_total_variation <= 1e-12);
  for (const auto& features : h) {
    auto pooled = pooled_conditional(world.pool, world.model, features);
    auto direct =
        source_conditional(world.pool.sources[0], world.model, features);
    for (std::size_t y = 0; y < 4; ++y)
      CHECK(std::abs(pooled[y] - direct[y]) <= 1e-15);
  }
}

TEST_CASE("dominant prior: stale prior after a b perturbation is detected") {
  auto world = small_idealized();
  auto stale = composite_prior(world.pool);
  world.pool.sources[0].offsets[0] += 0.5;
  CounterRng rng(3);
  auto h = gaussian_h(rng, 20, world.model.feature_dim);
  auto report = check_dominant_prior(world, h, &stale);
  CHECK(report.max_total_variation > 1e-4);
}

TEST_CASE("dominant prior refuses non-idealized models") {
  auto world = small_idealized();
  world.model.weights[0][0] += 0.1;  // break the separable family
  CounterRng rng(4);
  auto h = gaussian_h(rng, 5, world.model.feature_dim);
  CHECK_THROWS_AS(check_dominant_prior(world, h), Error);
  // The approx variant accepts it and only reports.
  auto report = check_dominant_prior_approx(world.pool, world.model, h);
  CHECK(report.h_samples == 5);
}

TEST_CASE("coverage: exposed-by-one label equals its single summand") {
  SourcePool pool = uniform_pool(3, 2);
  pool.sources[0].mask = {1, 1, 0};
  pool.sources[1].mask = {0, 1, 1};
  pool.sources[0].offsets = {0.4, -0.1, 0.0};
  pool.sources[1].offsets = {0.0, 0.2, -0.6};
  pool.sources[0].shift = 0.3;
  pool.sources[1].shift = -0.2;
  auto prior = composite_prior(pool);
  REQUIRE(prior.kappa[0].has_value());
  CHECK(*prior.kappa[0] ==
        doctest::Approx(std::log(0.5) + 0.4 - 0.3).epsilon(1e-12));
  REQUIRE(prior.kappa[2].has_value());
  CHECK(*prior.kappa[2] ==
        doctest::Approx(std::log(0.5) - 0.6 + 0.2).epsilon(1e-12));
  CHECK(check_coverage(pool).pass());
}

TEST_CASE("coverage: biconditional across 100 random pools via suite runner") {
  TheorySuiteConfig cfg;
  cfg.fuzz_pools = 100;
  auto doc = run_theory_suite("coverage", 17, cfg);
  CHECK(doc["pass"] == true);
  CHECK(doc["suites"]["coverage"]["violations"] == 0);
  CHECK(doc["suites"]["coverage"]["fault_detected"] == true);
}

TEST_CASE("dilution: single source has zero slack on both sides") {
  SourcePool pool = uniform_pool(4, 1);
  pool.sources[0].offsets = {0.5, -0.5, 0.1, 0.0};
  pool.sources[0].shift = 0.2;
  auto report = check_dilution(pool);
  CHECK(report.pass);
  for (double s : report.lower_slack) CHECK(std::abs(s) <= 1e-12);
  for (double s : report.upper_slack) CHECK(std::abs(s) <= 1e-12);
}

TEST_CASE("dilution: identical sources under uniform weights hit the upper bound") {
  SourcePool pool = uniform_pool(3, 4);
  for (auto& s : pool.sources) {
    s.offsets = {0.3, -0.2, 0.0};
    s.shift = 0.1;
  }
  auto report = check_dilution(pool);
  CHECK(report.pass);
  const double log_s = std::log(4.0);
  for (double s : report.lower_slack) CHECK(s == doctest::Approx(log_s));
  for (double s : report.upper_slack) CHECK(std::abs(s) <= 1e-12);
}

TEST_CASE("dilution: 1000 random pools never violate the sandwich") {
  TheorySuiteConfig cfg;
  cfg.fuzz_pools = 1000;
  auto doc = run_theory_suite("dilution", 23, cfg);
  CHECK(doc["pass"] == true);
  CHECK(doc["suites"]["dilution"]["max_violation"].get<double>() <= 1e-12);
}

TEST_CASE("contrast: identical sources give zero residual and zero rhs") {
  SourcePool pool = uniform_pool(3, 2);
  for (auto& s : pool.sources) s.offsets = {0.2, -0.1, 0.3};
  SemanticModel model;
  model.feature_dim = 2;
  model.weights = {{0.5, -0.3}, {0.1, 0.8}, {-0.6, 0.2}};
  model.label_bias = {0.0, 0.1, -0.2};
  CounterRng rng(5);
  auto h = gaussian_h(rng, 20, 2);
  auto report = check_contrast(pool, model, h);
  CHECK(report.pairs_checked > 0);
  CHECK(report.max_residual <= 1e-12);
}

TEST_CASE("contrast: equal offsets with different masks cancel on co-exposed pairs") {
  SourcePool pool = uniform_pool(4, 2);
  pool.sources[0].mask = {1, 1, 1, 0};
  pool.sources[1].mask = {1, 1, 0, 1};
  pool.sources[0].offsets = {0.4, -0.3, 0.2, 0.0};
  pool.sources[1].offsets = {0.4, -0.3, 0.0, 0.5};
  SemanticModel model;
  model.feature_dim = 2;
  model.weights = {{1.0, 0.0}, {0.0, 1.0}, {0.5, 0.5}, {-0.5, 0.5}};
  model.label_bias = {0.0, 0.0, 0.0, 0.0};
  CounterRng rng(6);
  auto h = gaussian_h(rng, 20, 2);
  auto report = check_contrast(pool, model, h);
  // Only labels 0 and 1 are co-exposed; their offsets agree across sources.
  CHECK(report.pairs_checked == 20);
  CHECK(report.pairs_skipped > 0);
  CHECK(report.max_residual <= 1e-12);
}

TEST_CASE("contrast: random pools via suite runner stay within 1e-10") {
  TheorySuiteConfig cfg;
  cfg.fuzz_pools = 200;
  cfg.contrast_h_samples = 50;
  auto doc = run_theory_suite("contrast", 29, cfg);
  CHECK(doc["pass"] == true);
  CHECK(doc["suites"]["contrast"]["fault_detected"] == true);
}

TEST_CASE("concentration: degenerate mechanism has zero error at every size") {
  Mechanism fixed;
  fixed.mask = {1, 1, 0, 1};
  fixed.offsets = {0.5, -0.5, 0.0, 0.2};
  fixed.shift = 0.1;
  DegenerateMechanism mechanism(fixed, 1.0);
  std::vector<std::size_t> sizes = {5, 20};
  auto report = check_concentration(mechanism, sizes, 20, 0.05, 99);
  CHECK(report.oracle == "closed-form");
  for (const auto& s : report.per_size) {
    CHECK(s.median_error <= 1e-12);
    CHECK(s.coverage == 1.0);
  }
}

TEST_CASE("concentration: bound decreases with size at the exact sqrt rate") {
  BernoulliUniformMechanism mechanism(6, 0.8, 1.0);
  std::vector<std::size_t> sizes = {25, 100, 400};
  auto report = check_concentration(mechanism, sizes, 8, 0.05, 7, 1, 20000);
  REQUIRE(report.per_size.size() == 3);
  CHECK(report.per_size[0].bound > report.per_size[1].bound);
  CHECK(report.per_size[1].bound > report.per_size[2].bound);
  CHECK(report.per_size[2].bound / report.per_size[1].bound ==
        doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("concentration: errors shrink with source count, coverage holds") {
  BernoulliUniformMechanism mechanism(6, 0.8, 1.0);
  std::vector<std::size_t> sizes = {25, 100, 400};
  auto report = check_concentration(mechanism, sizes, 60, 0.05, 11, 1, 50000);
  for (const auto& s : report.per_size) CHECK(s.coverage >= 0.95);
  REQUIRE(report.rate_checks.size() == 2);
  for (const auto& r : report.rate_checks) {
    CHECK(r.ratio >= 0.35);
    CHECK(r.ratio <= 0.75);
  }
}

TEST_CASE("concentration: deterministic across worker counts") {
  BernoulliUniformMechanism mechanism(4, 0.8, 1.0);
  std::vector<std::size_t> sizes = {10, 40};
  auto a = check_concentration(mechanism, sizes, 16, 0.05, 3, 1, 5000);
  auto b = check_concentration(mechanism, sizes, 16, 0.05, 3, 4, 5000);
  REQUIRE(a.per_size.size() == b.per_size.size());
  for (std::size_t i = 0; i < a.per_size.size(); ++i) {
    CHECK(a.per_size[i].median_error == b.per_size[i].median_error);
    CHECK(a.per_size[i].coverage == b.per_size[i].coverage);
  }
}

TEST_CASE("concentration rejects invalid arguments") {
  BernoulliUniformMechanism mechanism(4, 0.8, 1.0);
  std::vector<std::size_t> none;
  CHECK_THROWS_AS(check_concentration(mechanism, none, 10, 0.05, 1), Error);
  std::vector<std::size_t> sizes = {10};
  CHECK_THROWS_AS(check_concentration(mechanism, sizes, 0, 0.05, 1), Error);
  CHECK_THROWS_AS(check_concentration(mechanism, sizes, 10, 1.5, 1), Error);
}

TEST_CASE("theory checks demand strictly positive weights") {
  SourcePool pool = uniform_pool(3, 2);
  pool.sources[0].weight = 1.0;
  pool.sources[1].weight = 0.0;
  CHECK_THROWS_AS(check_coverage(pool), Error);
  CHECK_THROWS_AS(check_dilution(pool), Error);
}

TEST_CASE("run_theory_suite rejects unknown suite names") {
  TheorySuiteConfig cfg;
  CHECK_THROWS_AS(run_theory_suite("bogus", 1, cfg), Error);
}

TEST_CASE("concentration CSV lists one row per size") {
  BernoulliUniformMechanism mechanism(4, 0.8, 1.0);
  std::vector<std::size_t> sizes = {10, 40};
  auto report = check_concentration(mechanism, sizes, 8, 0.05, 3, 1, 2000);
  const std::string csv = concentration_quantiles_csv(report);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);  // header + 2 rows
  CHECK(csv.rfind("size,bound,coverage", 0) == 0);
}
