#include "shotmix/theory.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>
#include <sstream>

#include "shotmix/error.hpp"
#include "shotmix/parallel.hpp"

namespace shotmix {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require_positive_weights(const SourcePool& pool) {
  for (const auto& s : pool.sources)
    if (!(s.weight > 0.0))
      fail_invalid("theory checks need strictly positive source weights; '" +
                   s.id + "' has weight " + std::to_string(s.weight));
}

void require_idealized(const IdealizedWorld& world) {
  const auto& model = world.model;
  if (!model.shared_weight)
    fail_invalid("check_dominant_prior: model lacks a shared normalizer "
                 "component; use check_dominant_prior_approx");
  for (const auto& w : model.weights)
    if (w != *model.shared_weight)
      fail_invalid("check_dominant_prior: model is not the separable "
                   "idealized family; use check_dominant_prior_approx");
}

double total_variation(std::span<const double> a, std::span<const double> b) {
  double tv = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) tv += std::abs(a[i] - b[i]);
  return 0.5 * tv;
}

DominantPriorReport compare_against_prior_softmax(
    const SourcePool& pool, const SemanticModel& model,
    std::span<const std::vector<double>> h_samples,
    const CompositePrior& prior) {
  DominantPriorReport report;
  report.h_samples = h_samples.size();
  const std::size_t n = pool.vocab.size();
  for (const auto& h : h_samples) {
    const auto pooled = pooled_conditional(pool, model, h);
    // softmax(f* + kappa) restricted to labels with finite kappa.
    std::vector<double> predicted(n, 0.0);
    double max_logit = -kInf;
    for (std::size_t y = 0; y < n; ++y)
      if (prior.kappa[y])
        max_logit = std::max(max_logit, model.score(h, y) + *prior.kappa[y]);
    double z = 0.0;
    for (std::size_t y = 0; y < n; ++y) {
      if (!prior.kappa[y]) continue;
      predicted[y] = std::exp(model.score(h, y) + *prior.kappa[y] - max_logit);
      z += predicted[y];
    }
    for (auto& p : predicted) p /= z;
    report.max_total_variation =
        std::max(report.max_total_variation, total_variation(pooled, predicted));
  }
  return report;
}

double quantile(std::vector<double> sorted, double q) {
  if (sorted.empty()) return 0.0;
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(pos);
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] * (1.0 - frac) + sorted[hi] * frac;
}

}  // namespace

DominantPriorReport check_dominant_prior(
    const IdealizedWorld& world,
    std::span<const std::vector<double>> h_samples,
    const CompositePrior* prior) {
  world.pool.validate();
  require_positive_weights(world.pool);
  require_idealized(world);
  CompositePrior computed;
  if (!prior) {
    computed = composite_prior(world.pool);
    prior = &computed;
  }
  auto report =
      compare_against_prior_softmax(world.pool, world.model, h_samples, *prior);
  report.tolerance = 1e-10;
  report.pass = report.max_total_variation <= report.tolerance;
  return report;
}

DominantPriorReport check_dominant_prior_approx(
    const SourcePool& pool, const SemanticModel& model,
    std::span<const std::vector<double>> h_samples) {
  pool.validate();
  require_positive_weights(pool);
  const CompositePrior prior = composite_prior(pool);
  auto report = compare_against_prior_softmax(pool, model, h_samples, prior);
  report.tolerance = std::numeric_limits<double>::quiet_NaN();  // descriptive only
  report.pass = false;
  return report;
}

CoverageReport check_coverage(const SourcePool& pool,
                              const CompositePrior* prior) {
  pool.validate();
  require_positive_weights(pool);
  CompositePrior computed;
  if (!prior) {
    computed = composite_prior(pool);
    prior = &computed;
  }

  CoverageReport report;
  const std::size_t n = pool.vocab.size();
  for (std::size_t y = 0; y < n; ++y) {
    bool exposed = false;
    double best_summand = -kInf;
    for (const auto& s : pool.sources) {
      if (s.mask[y] == 0) continue;
      exposed = true;
      best_summand = std::max(
          best_summand, std::log(s.weight) + s.offsets[y] - s.shift);
    }
    const bool absent = !prior->kappa[y].has_value();
    if (absent == exposed) {
      report.biconditional_holds = false;
      report.violations.push_back("label '" + pool.vocab.labels[y] +
                                  "': absent/masked biconditional broken");
    }
    if (exposed != prior->kappa[y].has_value()) report.vocab_matches_union = false;
    if (exposed && prior->kappa[y] &&
        *prior->kappa[y] < best_summand - 1e-12) {
      report.lower_bound_holds = false;
      report.violations.push_back("label '" + pool.vocab.labels[y] +
                                  "': kappa below the single-source bound");
    }
  }
  return report;
}

DilutionReport check_dilution(const SourcePool& pool,
                              const CompositePrior* prior) {
  pool.validate();
  require_positive_weights(pool);
  CompositePrior computed;
  if (!prior) {
    computed = composite_prior(pool);
    prior = &computed;
  }

  DilutionReport report;
  const double log_s = std::log(static_cast<double>(pool.sources.size()));
  for (std::size_t y = 0; y < pool.vocab.size(); ++y) {
    double lower = -kInf;
    for (const auto& s : pool.sources)
      if (s.mask[y] == 1)
        lower = std::max(lower, s.offsets[y] - s.shift + std::log(s.weight));
    if (!prior->kappa[y]) continue;  // absent labels have no sandwich
    const double kappa = *prior->kappa[y];
    report.lower_slack.push_back(kappa - lower);
    report.upper_slack.push_back(lower + log_s - kappa);
    const double violation =
        std::max(lower - kappa, kappa - (lower + log_s));
    report.max_violation = std::max(report.max_violation, violation);
    if (violation > 1e-12) report.pass = false;
  }
  return report;
}

ContrastReport check_contrast(
    const SourcePool& pool, const SemanticModel& model,
    std::span<const std::vector<double>> h_samples,
    const std::vector<std::vector<double>>* declared_offsets) {
  pool.validate();
  require_positive_weights(pool);
  const std::size_t n = pool.vocab.size();
  const std::size_t n_sources = pool.sources.size();
  if (declared_offsets && declared_offsets->size() != n_sources)
    fail_invalid("check_contrast: declared offsets shape mismatch");

  ContrastReport report;
  for (const auto& h : h_samples) {
    std::vector<std::vector<double>> conditionals;
    conditionals.reserve(n_sources);
    for (const auto& s : pool.sources)
      conditionals.push_back(source_conditional(s, model, h));

    for (std::size_t s1 = 0; s1 < n_sources; ++s1) {
      for (std::size_t s2 = s1 + 1; s2 < n_sources; ++s2) {
        for (std::size_t y = 0; y < n; ++y) {
          for (std::size_t yp = y + 1; yp < n; ++yp) {
            const bool co_exposed =
                pool.sources[s1].mask[y] && pool.sources[s1].mask[yp] &&
                pool.sources[s2].mask[y] && pool.sources[s2].mask[yp];
            if (!co_exposed) {
              ++report.pairs_skipped;
              continue;
            }
            const double lhs =
                (std::log(conditionals[s1][y]) - std::log(conditionals[s1][yp])) -
                (std::log(conditionals[s2][y]) - std::log(conditionals[s2][yp]));
            const auto& b1 =
                declared_offsets ? (*declared_offsets)[s1] : pool.sources[s1].offsets;
            const auto& b2 =
                declared_offsets ? (*declared_offsets)[s2] : pool.sources[s2].offsets;
            const double rhs = (b1[y] - b1[yp]) - (b2[y] - b2[yp]);
            report.max_residual =
                std::max(report.max_residual, std::abs(lhs - rhs));
            ++report.pairs_checked;
          }
        }
      }
    }
  }
  return report;
}

BernoulliUniformMechanism::BernoulliUniformMechanism(std::size_t labels,
                                                     double mask_p,
                                                     double bound)
    : labels_(labels), mask_p_(mask_p), bound_(bound) {
  if (labels == 0) fail_invalid("mechanism: label count must be positive");
  if (!(mask_p > 0.0 && mask_p <= 1.0))
    fail_invalid("mechanism: mask probability must be in (0,1]");
  if (!(bound >= 0.0)) fail_invalid("mechanism: offset bound must be >= 0");
}

Mechanism BernoulliUniformMechanism::sample(CounterRng& rng) const {
  Mechanism m;
  m.mask.assign(labels_, 0);
  m.offsets.assign(labels_, 0.0);
  // Redraw fully-masked sources: a pool source must expose something.
  bool any = false;
  while (!any) {
    for (std::size_t y = 0; y < labels_; ++y) {
      m.mask[y] = rng.next_double() < mask_p_ ? 1 : 0;
      any = any || m.mask[y] == 1;
    }
  }
  for (std::size_t y = 0; y < labels_; ++y)
    m.offsets[y] = bound_ * (2.0 * rng.next_double() - 1.0);
  m.shift = 0.0;
  return m;
}

DegenerateMechanism::DegenerateMechanism(Mechanism fixed, double bound)
    : fixed_(std::move(fixed)), bound_(bound) {
  for (double b : fixed_.offsets)
    if (std::abs(b) > bound_)
      fail_invalid("mechanism: fixed offsets exceed the declared bound");
}

Mechanism DegenerateMechanism::sample(CounterRng&) const { return fixed_; }

std::optional<std::vector<double>> DegenerateMechanism::closed_form_population()
    const {
  std::vector<double> mbar(fixed_.mask.size(), 0.0);
  for (std::size_t y = 0; y < mbar.size(); ++y)
    if (fixed_.mask[y] == 1)
      mbar[y] = std::exp(fixed_.offsets[y] - fixed_.shift);
  return mbar;
}

ConcentrationReport check_concentration(const MechanismDistribution& mechanism,
                                        std::span<const std::size_t> sizes,
                                        int replications, double delta,
                                        std::uint64_t seed, int workers,
                                        std::size_t oracle_draws) {
  if (sizes.empty()) fail_invalid("check_concentration: no sizes given");
  if (replications < 1) fail_invalid("check_concentration: replications >= 1");
  if (!(delta > 0.0 && delta < 1.0))
    fail_invalid("check_concentration: delta must be in (0,1)");

  const std::size_t n_labels = mechanism.label_count();
  const double bound_b = mechanism.offset_bound();
  CounterRng master(seed, CounterRng::stream_of("theory.concentration"));

  ConcentrationReport report;
  report.sizes.assign(sizes.begin(), sizes.end());
  report.replications = replications;
  report.delta = delta;
  report.offset_bound = bound_b;

  // Population prior: closed form when the mechanism distribution supports
  // it, otherwise a fixed-seed Monte Carlo estimate.
  std::vector<double> mbar;
  if (auto closed = mechanism.closed_form_population()) {
    mbar = std::move(*closed);
    report.oracle = "closed-form";
  } else {
    mbar.assign(n_labels, 0.0);
    CounterRng oracle_rng = master.fork(CounterRng::stream_of("population"));
    for (std::size_t i = 0; i < oracle_draws; ++i) {
      const Mechanism m = mechanism.sample(oracle_rng);
      for (std::size_t y = 0; y < n_labels; ++y)
        if (m.mask[y] == 1) mbar[y] += std::exp(m.offsets[y] - m.shift);
    }
    for (auto& v : mbar) v /= static_cast<double>(oracle_draws);
    report.oracle =
        "monte-carlo-" + std::to_string(oracle_draws) + "-draws";
  }

  std::vector<std::optional<double>> kappabar(n_labels);
  double m_min = kInf;
  for (std::size_t y = 0; y < n_labels; ++y) {
    if (mbar[y] > 0.0) {
      kappabar[y] = std::log(mbar[y]);
      m_min = std::min(m_min, mbar[y]);
    }
  }
  if (!std::isfinite(m_min))
    fail_invalid("check_concentration: population prior is zero everywhere");
  report.m_min = m_min;

  const double log_term =
      std::log(2.0 * static_cast<double>(n_labels) / delta);

  for (std::size_t size_idx = 0; size_idx < report.sizes.size(); ++size_idx) {
    const std::size_t pool_size = report.sizes[size_idx];
    ConcentrationSizeStats stats;
    stats.size = pool_size;
    stats.bound = std::exp(2.0 * bound_b) / m_min *
                  std::sqrt(log_term / (2.0 * static_cast<double>(pool_size)));

    std::vector<double> errors(static_cast<std::size_t>(replications), 0.0);
    CounterRng size_rng = master.fork(1000 + size_idx);
    parallel_for(errors.size(), workers, [&](std::size_t rep) {
      CounterRng rng = size_rng.fork(rep);
      std::vector<double> m_hat(n_labels, 0.0);
      for (std::size_t s = 0; s < pool_size; ++s) {
        const Mechanism m = mechanism.sample(rng);
        for (std::size_t y = 0; y < n_labels; ++y) {
          if (m.mask[y] == 0) continue;
          if (std::abs(m.offsets[y]) > bound_b)
            fail_invalid("check_concentration: mechanism draw exceeds |b| <= B");
          m_hat[y] += std::exp(m.offsets[y] - m.shift);
        }
      }
      double err = 0.0;
      for (std::size_t y = 0; y < n_labels; ++y) {
        if (!kappabar[y]) continue;
        const double m_avg = m_hat[y] / static_cast<double>(pool_size);
        err = m_avg > 0.0
                  ? std::max(err, std::abs(std::log(m_avg) - *kappabar[y]))
                  : kInf;
      }
      errors[rep] = err;
    });

    int within = 0;
    for (double e : errors)
      if (e <= stats.bound) ++within;
    stats.coverage = static_cast<double>(within) / static_cast<double>(replications);
    std::sort(errors.begin(), errors.end());
    stats.median_error = quantile(errors, 0.5);
    for (double q : report.quantile_grid)
      stats.error_quantiles.push_back(quantile(errors, q));
    report.per_size.push_back(std::move(stats));
  }

  for (const auto& small : report.per_size) {
    for (const auto& large : report.per_size) {
      if (large.size != 4 * small.size) continue;
      ConcentrationRateCheck rate;
      rate.size_small = small.size;
      rate.size_large = large.size;
      rate.ratio = small.median_error > 0.0
                       ? large.median_error / small.median_error
                       : 0.0;
      rate.within_window = rate.ratio >= report.rate_window_low &&
                           rate.ratio <= report.rate_window_high;
      report.rate_checks.push_back(rate);
    }
  }
  return report;
}

Json concentration_to_json(const ConcentrationReport& report) {
  Json doc;
  doc["sizes"] = report.sizes;
  doc["replications"] = report.replications;
  doc["delta"] = report.delta;
  doc["B"] = report.offset_bound;
  doc["M_min"] = report.m_min;
  doc["oracle"] = report.oracle;
  doc["quantile_grid"] = report.quantile_grid;
  Json per_size = Json::array();
  for (const auto& s : report.per_size)
    per_size.push_back(Json{{"size", s.size},
                            {"bound", s.bound},
                            {"coverage", s.coverage},
                            {"median_error", s.median_error},
                            {"error_quantiles", s.error_quantiles}});
  doc["per_size"] = per_size;
  doc["rate_window"] = {report.rate_window_low, report.rate_window_high};
  Json rates = Json::array();
  for (const auto& r : report.rate_checks)
    rates.push_back(Json{{"size_small", r.size_small},
                         {"size_large", r.size_large},
                         {"ratio", r.ratio},
                         {"within_window", r.within_window}});
  doc["rate_checks"] = rates;
  return doc;
}

std::string concentration_quantiles_csv(const ConcentrationReport& report) {
  std::ostringstream out;
  out << "size,bound,coverage";
  for (double q : report.quantile_grid) out << ",q" << q;
  out << '\n';
  for (const auto& s : report.per_size) {
    out << s.size << ',' << Json(s.bound).dump() << ',' << Json(s.coverage).dump();
    for (double v : s.error_quantiles) out << ',' << Json(v).dump();
    out << '\n';
  }
  return out.str();
}

namespace {

// Fuzz-pool generator shared by the suite runner: masks keep every source
// exposing at least one label and weights stay strictly positive.
SourcePool fuzz_pool(CounterRng& rng, double offset_bound) {
  const std::size_t n_labels = 2 + rng.next_index(7);
  const std::size_t n_sources = 1 + rng.next_index(5);
  SourcePool pool;
  pool.offset_bound = offset_bound;
  for (std::size_t y = 0; y < n_labels; ++y)
    pool.vocab.labels.push_back("y" + std::to_string(y));
  std::vector<double> pi(n_sources);
  double pi_sum = 0.0;
  for (auto& p : pi) pi_sum += (p = 0.05 + rng.next_double());
  for (std::size_t s = 0; s < n_sources; ++s) {
    SourceSpec spec;
    spec.id = "s" + std::to_string(s);
    spec.weight = pi[s] / pi_sum;
    spec.shift = rng.next_gaussian();
    spec.mask.assign(n_labels, 0);
    spec.offsets.assign(n_labels, 0.0);
    for (std::size_t y = 0; y < n_labels; ++y) {
      spec.mask[y] = rng.next_double() < 0.7 ? 1 : 0;
      spec.offsets[y] = offset_bound * (2.0 * rng.next_double() - 1.0);
    }
    spec.mask[rng.next_index(n_labels)] = 1;
    pool.sources.push_back(std::move(spec));
  }
  return pool;
}

SemanticModel fuzz_model(CounterRng& rng, std::size_t n_labels) {
  SemanticModel model;
  model.feature_dim = 2 + rng.next_index(3);
  model.weights.assign(n_labels, std::vector<double>(model.feature_dim));
  model.label_bias.assign(n_labels, 0.0);
  for (auto& w : model.weights)
    for (auto& v : w) v = rng.next_gaussian();
  for (auto& b : model.label_bias) b = 0.5 * rng.next_gaussian();
  return model;
}

std::vector<std::vector<double>> fuzz_features(CounterRng& rng, int count,
                                               std::size_t dim) {
  std::vector<std::vector<double>> h(static_cast<std::size_t>(count));
  for (auto& v : h) {
    v.resize(dim);
    for (auto& x : v) x = rng.next_gaussian();
  }
  return h;
}

IdealizedWorld fuzz_idealized(CounterRng& rng, double offset_bound) {
  const std::size_t n_labels = 2 + rng.next_index(6);
  const std::size_t n_sources = 1 + rng.next_index(4);
  const std::size_t dim = 2 + rng.next_index(3);
  Vocabulary vocab;
  for (std::size_t y = 0; y < n_labels; ++y)
    vocab.labels.push_back("y" + std::to_string(y));
  std::vector<std::vector<std::uint8_t>> masks(n_sources);
  std::vector<std::vector<double>> offsets(n_sources);
  std::vector<double> pi(n_sources);
  double pi_sum = 0.0;
  for (std::size_t s = 0; s < n_sources; ++s) {
    masks[s].assign(n_labels, 0);
    offsets[s].assign(n_labels, 0.0);
    for (std::size_t y = 0; y < n_labels; ++y) {
      masks[s][y] = rng.next_double() < 0.7 ? 1 : 0;
      offsets[s][y] = offset_bound * (2.0 * rng.next_double() - 1.0);
    }
    masks[s][rng.next_index(n_labels)] = 1;
    pi_sum += (pi[s] = 0.05 + rng.next_double());
  }
  for (auto& p : pi) p /= pi_sum;
  std::vector<double> gain(n_labels);
  for (auto& g : gain) g = rng.next_gaussian();
  std::vector<double> shared(dim);
  for (auto& w : shared) w = rng.next_gaussian();
  return make_idealized_world(std::move(vocab), std::move(masks),
                              std::move(offsets), std::move(pi),
                              std::move(gain), std::move(shared),
                              offset_bound);
}

struct SuiteOutcome {
  bool pass = false;
  Json detail;
};

SuiteOutcome run_prop1(std::uint64_t seed, const TheorySuiteConfig& cfg) {
  CounterRng rng(seed, CounterRng::stream_of("suite.prop1"));
  double worst = 0.0;
  for (int i = 0; i < cfg.fuzz_pools; ++i) {
    auto world = fuzz_idealized(rng, cfg.offset_bound);
    auto h = fuzz_features(rng, cfg.prop1_h_samples, world.model.feature_dim);
    auto report = check_dominant_prior(world, h);
    worst = std::max(worst, report.max_total_variation);
  }

  // Fault injection: a stale prior must register as a deviation.
  auto world = fuzz_idealized(rng, cfg.offset_bound);
  auto h = fuzz_features(rng, cfg.prop1_h_samples, world.model.feature_dim);
  auto stale = composite_prior(world.pool);
  std::size_t y = 0;
  while (!stale.kappa[y]) ++y;
  for (auto& s : world.pool.sources)
    if (s.mask[y]) { s.offsets[y] = std::min(cfg.offset_bound, s.offsets[y] + 0.5); break; }
  const bool fault_detected =
      check_dominant_prior(world, h, &stale).max_total_variation > 1e-6;

  SuiteOutcome out;
  out.pass = worst <= 1e-10 && fault_detected;
  out.detail = {{"max_total_variation", worst},
                {"tolerance", 1e-10},
                {"pools", cfg.fuzz_pools},
                {"fault_detected", fault_detected}};
  return out;
}

SuiteOutcome run_coverage(std::uint64_t seed, const TheorySuiteConfig& cfg) {
  CounterRng rng(seed, CounterRng::stream_of("suite.coverage"));
  int violations = 0;
  for (int i = 0; i < cfg.fuzz_pools; ++i) {
    auto pool = fuzz_pool(rng, cfg.offset_bound);
    if (!check_coverage(pool).pass()) ++violations;
  }

  // Fault injection: hide the only exposing source after the prior is built.
  bool fault_detected = false;
  for (int attempt = 0; attempt < 100 && !fault_detected; ++attempt) {
    auto pool = fuzz_pool(rng, cfg.offset_bound);
    auto prior = composite_prior(pool);
    for (std::size_t y = 0; y < pool.vocab.size() && !fault_detected; ++y) {
      std::size_t exposing = 0, who = 0;
      for (std::size_t s = 0; s < pool.sources.size(); ++s)
        if (pool.sources[s].mask[y]) { ++exposing; who = s; }
      if (exposing != 1) continue;
      auto& source = pool.sources[who];
      // Keep the source valid: it must still expose something else.
      bool exposes_other = false;
      for (std::size_t yp = 0; yp < pool.vocab.size(); ++yp)
        exposes_other = exposes_other || (yp != y && source.mask[yp] == 1);
      if (!exposes_other) continue;
      source.mask[y] = 0;
      fault_detected = !check_coverage(pool, &prior).pass();
      source.mask[y] = 1;
    }
  }

  SuiteOutcome out;
  out.pass = violations == 0 && fault_detected;
  out.detail = {{"pools", cfg.fuzz_pools},
                {"violations", violations},
                {"fault_detected", fault_detected}};
  return out;
}

SuiteOutcome run_dilution(std::uint64_t seed, const TheorySuiteConfig& cfg) {
  CounterRng rng(seed, CounterRng::stream_of("suite.dilution"));
  double worst = 0.0;
  for (int i = 0; i < cfg.fuzz_pools; ++i) {
    auto pool = fuzz_pool(rng, cfg.offset_bound);
    worst = std::max(worst, check_dilution(pool).max_violation);
  }

  // Fault injection: inflate a weight after the prior is computed so the
  // lower bound overtakes the stale kappa.
  auto pool = fuzz_pool(rng, cfg.offset_bound);
  auto prior = composite_prior(pool);
  auto corrupted = pool;
  corrupted.sources[0].weight = 1.0;
  for (std::size_t s = 1; s < corrupted.sources.size(); ++s)
    corrupted.sources[s].weight = 0.0;
  bool fault_detected = false;
  if (corrupted.sources.size() > 1) {
    // Restore validity: strictly positive weights, renormalized.
    const double bulk = 0.999;
    corrupted.sources[0].weight = bulk;
    const double rest =
        (1.0 - bulk) / static_cast<double>(corrupted.sources.size() - 1);
    for (std::size_t s = 1; s < corrupted.sources.size(); ++s)
      corrupted.sources[s].weight = rest;
    fault_detected = !check_dilution(corrupted, &prior).pass;
  } else {
    // Single source: shift the offsets instead.
    corrupted.sources[0].offsets[0] =
        std::min(cfg.offset_bound, corrupted.sources[0].offsets[0] + 0.5);
    fault_detected = !check_dilution(corrupted, &prior).pass;
  }

  SuiteOutcome out;
  out.pass = worst <= 1e-12 && fault_detected;
  out.detail = {{"pools", cfg.fuzz_pools},
                {"max_violation", worst},
                {"fault_detected", fault_detected}};
  return out;
}

SuiteOutcome run_contrast(std::uint64_t seed, const TheorySuiteConfig& cfg) {
  CounterRng rng(seed, CounterRng::stream_of("suite.contrast"));
  double worst = 0.0;
  std::size_t checked = 0;
  for (int i = 0; i < cfg.fuzz_pools; ++i) {
    auto pool = fuzz_pool(rng, cfg.offset_bound);
    auto model = fuzz_model(rng, pool.vocab.size());
    auto h = fuzz_features(rng, cfg.contrast_h_samples, model.feature_dim);
    auto report = check_contrast(pool, model, h);
    worst = std::max(worst, report.max_residual);
    checked += report.pairs_checked;
  }

  // Fault injection: declare offsets that disagree with the generating pool.
  bool fault_detected = false;
  for (int attempt = 0; attempt < 100 && !fault_detected; ++attempt) {
    auto pool = fuzz_pool(rng, cfg.offset_bound);
    if (pool.sources.size() < 2) continue;
    auto model = fuzz_model(rng, pool.vocab.size());
    auto h = fuzz_features(rng, 5, model.feature_dim);
    std::vector<std::vector<double>> declared;
    for (const auto& s : pool.sources) declared.push_back(s.offsets);
    declared[0][0] += 0.5;
    auto report = check_contrast(pool, model, h, &declared);
    fault_detected = report.pairs_checked > 0 && report.max_residual > 1e-6;
  }

  SuiteOutcome out;
  out.pass = worst <= 1e-10 && checked > 0 && fault_detected;
  out.detail = {{"pools", cfg.fuzz_pools},
                {"max_residual", worst},
                {"pairs_checked", checked},
                {"fault_detected", fault_detected}};
  return out;
}

SuiteOutcome run_concentration(std::uint64_t seed, const TheorySuiteConfig& cfg) {
  BernoulliUniformMechanism mechanism(6, cfg.mask_p, cfg.offset_bound);
  auto report =
      check_concentration(mechanism, cfg.sizes, cfg.replications, cfg.delta,
                          seed, cfg.workers, cfg.oracle_draws);
  bool coverage_ok = true;
  for (const auto& s : report.per_size)
    coverage_ok = coverage_ok && s.coverage >= 1.0 - report.delta;
  bool rate_ok = !report.rate_checks.empty();
  for (const auto& r : report.rate_checks) rate_ok = rate_ok && r.within_window;

  SuiteOutcome out;
  out.pass = coverage_ok && rate_ok;
  out.detail = concentration_to_json(report);
  out.detail["coverage_ok"] = coverage_ok;
  out.detail["rate_ok"] = rate_ok;
  return out;
}

}  // namespace

Json run_theory_suite(const std::string& suite, std::uint64_t seed,
                      const TheorySuiteConfig& config) {
  Json doc;
  doc["seed"] = seed;
  bool all_pass = true;
  auto add = [&](const std::string& name, const SuiteOutcome& outcome) {
    Json entry = outcome.detail;
    entry["pass"] = outcome.pass;
    doc["suites"][name] = entry;
    all_pass = all_pass && outcome.pass;
  };

  if (suite == "prop1" || suite == "all") add("prop1", run_prop1(seed, config));
  if (suite == "coverage" || suite == "all")
    add("coverage", run_coverage(seed, config));
  if (suite == "dilution" || suite == "all")
    add("dilution", run_dilution(seed, config));
  if (suite == "contrast" || suite == "all")
    add("contrast", run_contrast(seed, config));
  if (suite == "concentration" || suite == "all")
    add("concentration", run_concentration(seed, config));

  if (!doc.contains("suites"))
    fail_invalid("unknown theory suite '" + suite +
                 "' (expected all|prop1|coverage|dilution|contrast|concentration)");
  doc["pass"] = all_pass;
  return doc;
}

}  // namespace shotmix
