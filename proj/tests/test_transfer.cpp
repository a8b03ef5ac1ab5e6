#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>

#include "shotmix/error.hpp"
#include "shotmix/rng.hpp"
#include "shotmix/transfer.hpp"

using namespace shotmix;

namespace {

TransferLedger make_ledger(std::vector<std::string> dims,
                           std::vector<std::vector<double>> A,
                           std::vector<double> base, double eps = 1e-8) {
  TransferLedger ledger;
  ledger.dims = std::move(dims);
  ledger.A = std::move(A);
  ledger.base = std::move(base);
  ledger.anchors.resize(ledger.dims.size());
  for (std::size_t j = 0; j < ledger.dims.size(); ++j)
    ledger.anchors[j] = ledger.A[j][j];
  ledger.eps = eps;
  return ledger;
}

TransferLedger random_ledger(CounterRng& rng, std::size_t n) {
  std::vector<std::string> dims;
  for (std::size_t i = 0; i < n; ++i) dims.push_back("d" + std::to_string(i));
  std::vector<std::vector<double>> A(n, std::vector<double>(n));
  std::vector<double> base(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) A[i][j] = rng.next_double();
  for (std::size_t j = 0; j < n; ++j) base[j] = rng.next_double() * 0.6;
  return make_ledger(std::move(dims), std::move(A), std::move(base));
}

// Independent elementwise evaluation of the two prior formulas, kept free of
// the production code path.
std::vector<std::vector<double>> oracle_ttilde(const TransferLedger& lg) {
  const std::size_t n = lg.size();
  std::vector<std::vector<double>> T(n, std::vector<double>(n, 0.0));
  for (std::size_t j = 0; j < n; ++j) {
    const double margin = lg.anchors[j] - lg.base[j];
    for (std::size_t i = 0; i < n; ++i) {
      if (margin <= 0.0) {
        T[i][j] = 0.0;
      } else {
        const double raw = (lg.A[i][j] - lg.base[j]) / (margin + lg.eps);
        T[i][j] = raw > 0.0 ? raw : 0.0;
      }
    }
  }
  std::vector<std::vector<double>> Tt(n, std::vector<double>(n, 0.0));
  for (std::size_t j = 0; j < n; ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += T[i][j];
    for (std::size_t i = 0; i < n; ++i) Tt[i][j] = T[i][j] / (s + lg.eps);
  }
  return Tt;
}

}  // namespace

TEST_CASE("compute_prior: zero off-diagonal gain when A equals base") {
  auto lg = make_ledger({"a", "b"}, {{0.8, 0.5}, {0.5, 0.9}}, {0.5, 0.5});
  auto prior = compute_prior(lg);
  CHECK(prior.T[0][1] == 0.0);
  CHECK(prior.T[1][0] == 0.0);
  CHECK(prior.T[0][0] == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(prior.T[1][1] == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("compute_prior: single positive source per target normalizes to ~1") {
  // Only d(j-1) helps target j; everyone else sits at base.
  auto lg = make_ledger({"a", "b", "c"},
                        {{0.9, 0.7, 0.4}, {0.4, 0.9, 0.7}, {0.7, 0.4, 0.9}},
                        {0.4, 0.4, 0.4});
  auto prior = compute_prior(lg);
  for (std::size_t j = 0; j < 3; ++j) {
    std::size_t positive = 0;
    for (std::size_t i = 0; i < 3; ++i) {
      if (i == j) continue;
      if (prior.Ttilde[i][j] > 0.0) {
        ++positive;
        // Column shared with the diagonal anchor entry.
        CHECK(prior.Ttilde[i][j] ==
              doctest::Approx(0.6 / 1.6).epsilon(1e-6));
      }
    }
    CHECK(positive == 1);
  }
}

TEST_CASE("compute_prior matches the brute-force elementwise oracle") {
  CounterRng rng(20260810);
  for (int rep = 0; rep < 200; ++rep) {
    auto lg = random_ledger(rng, 4);
    auto prior = compute_prior(lg);
    auto expect = oracle_ttilde(lg);
    for (std::size_t i = 0; i < 4; ++i)
      for (std::size_t j = 0; j < 4; ++j)
        CHECK(prior.Ttilde[i][j] == doctest::Approx(expect[i][j]).epsilon(1e-12));
  }
}

TEST_CASE("compute_prior: non-positive margin zeroes the whole column") {
  // Target b trains to below base.
  auto lg = make_ledger({"a", "b"}, {{0.8, 0.9}, {0.2, 0.3}}, {0.1, 0.4});
  auto prior = compute_prior(lg);
  CHECK(prior.T[0][1] == 0.0);
  CHECK(prior.T[1][1] == 0.0);
  CHECK(prior.Ttilde[0][1] == 0.0);
  CHECK(prior.Ttilde[1][1] == 0.0);
}

TEST_CASE("compute_prior column scale invariance") {
  // Scaling all pre-clamp gains of one target by a positive constant leaves
  // the normalized column unchanged up to eps effects.
  CounterRng rng(7);
  for (int rep = 0; rep < 50; ++rep) {
    auto lg = random_ledger(rng, 4);
    lg.eps = 1e-12;
    const std::size_t j = rep % 4;
    // c in (0, 1] keeps base + c*gain inside [0, 1] without clamping.
    const double c = 0.25 + 0.75 * rng.next_double();

    TransferLedger scaled = lg;
    for (std::size_t i = 0; i < 4; ++i) {
      const double gain = lg.A[i][j] - lg.base[j];
      scaled.A[i][j] = lg.base[j] + c * gain;
    }
    scaled.anchors[j] = scaled.A[j][j];
    if (scaled.anchors[j] - scaled.base[j] <= 0.0) continue;

    auto p1 = compute_prior(lg);
    auto p2 = compute_prior(scaled);
    for (std::size_t i = 0; i < 4; ++i)
      CHECK(std::abs(p1.Ttilde[i][j] - p2.Ttilde[i][j]) <= 1e-9);
  }
}

TEST_CASE("compute_prior is permutation equivariant") {
  CounterRng rng(99);
  auto lg = random_ledger(rng, 5);
  std::vector<std::size_t> perm = {3, 0, 4, 1, 2};

  TransferLedger permuted;
  permuted.eps = lg.eps;
  permuted.dims.resize(5);
  permuted.A.assign(5, std::vector<double>(5));
  permuted.base.resize(5);
  permuted.anchors.resize(5);
  for (std::size_t i = 0; i < 5; ++i) {
    permuted.dims[i] = lg.dims[perm[i]];
    permuted.base[i] = lg.base[perm[i]];
    permuted.anchors[i] = lg.anchors[perm[i]];
    for (std::size_t j = 0; j < 5; ++j)
      permuted.A[i][j] = lg.A[perm[i]][perm[j]];
  }

  auto p1 = compute_prior(lg);
  auto p2 = compute_prior(permuted);
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t j = 0; j < 5; ++j)
      CHECK(p2.Ttilde[i][j] ==
            doctest::Approx(p1.Ttilde[perm[i]][perm[j]]).epsilon(1e-12));
}

TEST_CASE("summarize_transfer: flat ledger has zero counts and gains") {
  auto lg = make_ledger({"a", "b", "c"},
                        {{0.5, 0.5, 0.5}, {0.5, 0.5, 0.5}, {0.5, 0.5, 0.5}},
                        {0.5, 0.5, 0.5});
  auto s = summarize_transfer(lg);
  for (const auto& d : s.per_dim) {
    CHECK(d.incoming_positive_count == 0);
    CHECK(d.outgoing_positive_count == 0);
    CHECK(d.mean_incoming_gain == doctest::Approx(0.0));
    CHECK(d.mean_outgoing_gain == doctest::Approx(0.0));
  }
}

TEST_CASE("summarize_transfer matches exhaustive enumeration") {
  CounterRng rng(4242);
  for (int rep = 0; rep < 100; ++rep) {
    auto lg = random_ledger(rng, 3);
    auto s = summarize_transfer(lg);
    for (std::size_t d = 0; d < 3; ++d) {
      int in_count = 0, out_count = 0;
      double in_sum = 0.0, out_sum = 0.0;
      for (std::size_t k = 0; k < 3; ++k) {
        if (k == d) continue;
        if (lg.A[k][d] > lg.base[d]) ++in_count;
        if (lg.A[d][k] > lg.base[k]) ++out_count;
        in_sum += lg.A[k][d] - lg.base[d];
        out_sum += lg.A[d][k] - lg.base[k];
      }
      CHECK(s.per_dim[d].incoming_positive_count == in_count);
      CHECK(s.per_dim[d].outgoing_positive_count == out_count);
      CHECK(s.per_dim[d].mean_incoming_gain == doctest::Approx(in_sum / 2));
      CHECK(s.per_dim[d].mean_outgoing_gain == doctest::Approx(out_sum / 2));
    }
  }
}

TEST_CASE("summarize_transfer captures donor-style asymmetry") {
  // Dimension 0 transfers out strongly (its row beats base everywhere) but
  // receives almost nothing (its column sits below base).
  const double b = 0.5;
  std::vector<std::vector<double>> A(6, std::vector<double>(6, b));
  for (std::size_t j = 1; j < 6; ++j) A[0][j] = 0.7;  // strong row
  for (std::size_t i = 1; i < 6; ++i) A[i][0] = 0.45; // weak column
  for (std::size_t d = 0; d < 6; ++d) A[d][d] = 0.8;
  auto lg = make_ledger({"d0", "d1", "d2", "d3", "d4", "d5"}, A,
                        std::vector<double>(6, b));
  auto s = summarize_transfer(lg);
  CHECK(s.per_dim[0].incoming_positive_count <
        s.per_dim[0].outgoing_positive_count);
  CHECK(s.per_dim[0].incoming_positive_count == 0);
  CHECK(s.per_dim[0].outgoing_positive_count == 5);
  CHECK(s.per_dim[0].mean_incoming_gain < 0.0);
  CHECK(s.per_dim[0].mean_outgoing_gain > 0.0);
}

TEST_CASE("summarize_transfer swaps sides under transposition") {
  CounterRng rng(321);
  auto lg = random_ledger(rng, 4);
  // Transposing A is only meaningful when base is shared across targets.
  std::fill(lg.base.begin(), lg.base.end(), 0.35);
  auto transposed = lg;
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j) transposed.A[i][j] = lg.A[j][i];
  for (std::size_t j = 0; j < 4; ++j)
    transposed.anchors[j] = transposed.A[j][j];

  auto s1 = summarize_transfer(lg);
  auto s2 = summarize_transfer(transposed);
  for (std::size_t d = 0; d < 4; ++d) {
    CHECK(s1.per_dim[d].incoming_positive_count ==
          s2.per_dim[d].outgoing_positive_count);
    CHECK(s1.per_dim[d].outgoing_positive_count ==
          s2.per_dim[d].incoming_positive_count);
    CHECK(s1.per_dim[d].mean_incoming_gain ==
          doctest::Approx(s2.per_dim[d].mean_outgoing_gain));
  }
}

TEST_CASE("summarize_transfer rejects a single-dimension ledger") {
  auto lg = make_ledger({"solo"}, {{0.8}}, {0.5});
  CHECK_THROWS_AS(summarize_transfer(lg), Error);
}

TEST_CASE("ledger save/load round trip") {
  CounterRng rng(11);
  auto lg = random_ledger(rng, 4);
  const auto path =
      (std::filesystem::temp_directory_path() / "shotmix_ledger_rt.json")
          .string();
  save_ledger(lg, path);
  auto loaded = load_ledger(path);
  CHECK(loaded.warnings.empty());
  CHECK(loaded.ledger.dims == lg.dims);
  CHECK(loaded.ledger.A == lg.A);
  CHECK(loaded.ledger.base == lg.base);
  CHECK(loaded.ledger.anchors == lg.anchors);
  CHECK(loaded.ledger.eps == lg.eps);
  std::filesystem::remove(path);
}

TEST_CASE("ledger parse rejects out-of-range entries") {
  Json doc = {{"dims", {"a", "b"}},
              {"A", {{0.5, 1.3}, {0.2, 0.6}}},
              {"base", {0.1, 0.1}},
              {"anchors", {0.5, 0.6}}};
  CHECK_THROWS_WITH_AS(parse_ledger(doc, "test"),
                       doctest::Contains("row 0, column 1"), Error);
}

TEST_CASE("ledger parse rejects NaN") {
  Json doc = {{"dims", {"a", "b"}},
              {"A", {{0.5, 0.4}, {0.2, 0.6}}},
              {"base", {0.1, 0.1}},
              {"anchors", {0.5, 0.6}}};
  doc["A"][1][0] = std::nan("");
  CHECK_THROWS_AS(parse_ledger(doc, "test"), Error);
}

TEST_CASE("ledger parse defaults missing anchors from the diagonal") {
  Json doc = {{"dims", {"a", "b"}},
              {"A", {{0.5, 0.4}, {0.2, 0.6}}},
              {"base", {0.1, 0.1}}};
  auto result = parse_ledger(doc, "test");
  REQUIRE(result.warnings.size() == 1);
  CHECK(result.warnings[0] == "anchors missing: defaulted to the diagonal of A");
  CHECK(result.ledger.anchors == std::vector<double>{0.5, 0.6});
}

TEST_CASE("ledger parse rejects anchors diverging from the diagonal") {
  Json doc = {{"dims", {"a", "b"}},
              {"A", {{0.5, 0.4}, {0.2, 0.6}}},
              {"base", {0.1, 0.1}},
              {"anchors", {0.5, 0.55}}};
  CHECK_THROWS_AS(parse_ledger(doc, "test"), Error);
}

TEST_CASE("ledger parse rejects base length mismatch") {
  Json doc = {{"dims", {"a", "b"}},
              {"A", {{0.5, 0.4}, {0.2, 0.6}}},
              {"base", {0.1}},
              {"anchors", {0.5, 0.6}}};
  CHECK_THROWS_AS(parse_ledger(doc, "test"), Error);
}

TEST_CASE("matrix CSV carries dim ids on both axes") {
  auto lg = make_ledger({"a", "b"}, {{0.5, 0.25}, {0.125, 0.75}}, {0.1, 0.1});
  const std::string csv = ledger_matrix_csv(lg);
  CHECK(csv ==
        "source\\target,a,b\n"
        "a,0.5,0.25\n"
        "b,0.125,0.75\n");
}
