#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "shotmix/annotation.hpp"
#include "shotmix/json_util.hpp"

namespace shotmix {

// All checks require strictly positive source weights: the corollaries are
// stated for pools where every source contributes.

struct DominantPriorReport {
  double max_total_variation = 0.0;
  std::size_t h_samples = 0;
  double tolerance = 1e-10;
  bool pass = false;
};

/// Exact identity check for the idealized construction: the pooled
/// conditional must equal softmax(f* + kappa) over the labels with finite
/// kappa. Refuses models that are not the separable idealized family.
/// `prior` defaults to composite_prior(world.pool); passing a stale prior is
/// the fault-injection seam.
DominantPriorReport check_dominant_prior(
    const IdealizedWorld& world,
    std::span<const std::vector<double>> h_samples,
    const CompositePrior* prior = nullptr);

/// Same comparison for arbitrary pools; reports the deviation without a
/// pass threshold (the residual bound constants are unspecified).
DominantPriorReport check_dominant_prior_approx(
    const SourcePool& pool, const SemanticModel& model,
    std::span<const std::vector<double>> h_samples);

struct CoverageReport {
  bool biconditional_holds = true;   // kappa absent <=> masked everywhere
  bool lower_bound_holds = true;     // kappa >= best single-source summand
  bool vocab_matches_union = true;   // finite-kappa set == union of exposures
  std::vector<std::string> violations;
  bool pass() const {
    return biconditional_holds && lower_bound_holds && vocab_matches_union;
  }
};

CoverageReport check_coverage(const SourcePool& pool,
                              const CompositePrior* prior = nullptr);

struct DilutionReport {
  bool pass = true;
  double max_violation = 0.0;  // amount by which the sandwich is broken
  std::vector<double> lower_slack;  // kappa - lower bound, exposed labels
  std::vector<double> upper_slack;  // upper bound - kappa, exposed labels
};

/// Log-sum-exp sandwich around kappa, with the max restricted to exposing
/// sources. Tolerance 1e-12.
DilutionReport check_dilution(const SourcePool& pool,
                              const CompositePrior* prior = nullptr);

struct ContrastReport {
  double max_residual = 0.0;
  std::size_t pairs_checked = 0;
  std::size_t pairs_skipped = 0;  // label pairs not co-exposed
};

/// Cross-source log-odds difference must equal the declared preference
/// contrast exactly; the semantic term cancels. `declared_offsets` defaults
/// to the pool's own offsets and is the fault-injection seam.
ContrastReport check_contrast(
    const SourcePool& pool, const SemanticModel& model,
    std::span<const std::vector<double>> h_samples,
    const std::vector<std::vector<double>>* declared_offsets = nullptr);

struct Mechanism {
  std::vector<std::uint8_t> mask;
  std::vector<double> offsets;
  double shift = 0.0;
};

/// Distribution over annotation mechanisms (C_s, b_s, a_s), drawn i.i.d.
/// per source with uniformly bounded offsets.
class MechanismDistribution {
 public:
  virtual ~MechanismDistribution() = default;
  virtual Mechanism sample(CounterRng& rng) const = 0;
  virtual std::size_t label_count() const = 0;
  virtual double offset_bound() const = 0;
  /// Exact population M-bar for finite-support distributions.
  virtual std::optional<std::vector<double>> closed_form_population() const {
    return std::nullopt;
  }
};

/// Masks i.i.d. Bernoulli(p) per label, redrawn until at least one label is
/// exposed; offsets i.i.d. Uniform[-B, B]; shift 0.
class BernoulliUniformMechanism : public MechanismDistribution {
 public:
  BernoulliUniformMechanism(std::size_t labels, double mask_p, double bound);
  Mechanism sample(CounterRng& rng) const override;
  std::size_t label_count() const override { return labels_; }
  double offset_bound() const override { return bound_; }

 private:
  std::size_t labels_;
  double mask_p_;
  double bound_;
};

/// Point mass on one fixed mechanism; population quantities are exact.
class DegenerateMechanism : public MechanismDistribution {
 public:
  explicit DegenerateMechanism(Mechanism fixed, double bound);
  Mechanism sample(CounterRng& rng) const override;
  std::size_t label_count() const override { return fixed_.mask.size(); }
  double offset_bound() const override { return bound_; }
  std::optional<std::vector<double>> closed_form_population() const override;

 private:
  Mechanism fixed_;
  double bound_;
};

struct ConcentrationSizeStats {
  std::size_t size = 0;       // |S|
  double bound = 0.0;         // theoretical uniform bound at this size
  double coverage = 0.0;      // fraction of replications within the bound
  double median_error = 0.0;  // median over replications of max_y |k - kbar|
  std::vector<double> error_quantiles;  // at the quantile grid below
};

struct ConcentrationRateCheck {
  std::size_t size_small = 0;
  std::size_t size_large = 0;  // == 4 * size_small
  double ratio = 0.0;          // median_error(large) / median_error(small)
  bool within_window = false;  // window below; consistency band, not a bound
};

struct ConcentrationReport {
  std::vector<std::size_t> sizes;
  int replications = 0;
  double delta = 0.05;
  double offset_bound = 0.0;  // B
  double m_min = 0.0;
  std::string oracle;  // which population estimate was used
  std::vector<double> quantile_grid = {0.5, 0.9, 0.95, 1.0};
  std::vector<ConcentrationSizeStats> per_size;
  // Window around the theoretical 1/sqrt(|S|) rate (ratio 0.5 for 4x); the
  // proposition is an upper bound, so this is a consistency band.
  double rate_window_low = 0.35;
  double rate_window_high = 0.75;
  std::vector<ConcentrationRateCheck> rate_checks;
};

/// Monte Carlo check of the concentration bound: per size, draws
/// `replications` pools of i.i.d. mechanisms under uniform weights and
/// compares the uniform kappa error against the theoretical bound. The
/// population prior comes from the mechanism's closed form when available,
/// otherwise from an `oracle_draws`-sample estimate under a fixed stream of
/// the master seed. Deterministic in (seed) regardless of worker count.
ConcentrationReport check_concentration(const MechanismDistribution& mechanism,
                                        std::span<const std::size_t> sizes,
                                        int replications, double delta,
                                        std::uint64_t seed, int workers = 1,
                                        std::size_t oracle_draws = 100000);

Json concentration_to_json(const ConcentrationReport& report);
std::string concentration_quantiles_csv(const ConcentrationReport& report);

struct TheorySuiteConfig {
  int fuzz_pools = 1000;
  int prop1_h_samples = 20;
  int contrast_h_samples = 50;
  std::vector<std::size_t> sizes = {25, 100, 400};
  int replications = 200;
  double delta = 0.05;
  double mask_p = 0.8;
  double offset_bound = 1.0;
  std::size_t oracle_draws = 100000;
  int workers = 1;
};

/// Runs one named suite (prop1 | coverage | dilution | contrast |
/// concentration | all) with fuzzed pools plus fault injection, and returns
/// a JSON report with one pass flag per suite.
Json run_theory_suite(const std::string& suite, std::uint64_t seed,
                      const TheorySuiteConfig& config);

}  // namespace shotmix
