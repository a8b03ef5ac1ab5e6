#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "shotmix/annotation.hpp"
#include "shotmix/json_util.hpp"
#include "shotmix/scheduler.hpp"
#include "shotmix/transfer.hpp"

namespace shotmix {

/// One dimension mapped onto an annotation world: heterogeneous sources over
/// a slice of the universal vocabulary plus sampled train/val stores.
struct DimWorld {
  DimensionId dim;
  SourcePool pool;           // vocab: this dimension's labels (universal names)
  SemanticModel model;       // generative truth, features of universal width
  std::vector<std::size_t> universal_ids;  // universal index per local label
  std::vector<AnnotatedExample> train;     // labels are local indices
  std::vector<AnnotatedExample> val;
};

struct SyntheticSuite {
  Vocabulary universal;
  std::size_t feature_dim = 0;
  std::vector<DimWorld> worlds;
  DimensionId donor;  // richest source dimension; the single-source control

  std::vector<DimensionId> dims() const;
  const DimWorld& world_of(const DimensionId& dim) const;
};

/// Recipe for one dimension of a synthetic suite. Cross-dimensional transfer
/// comes from borrowed labels: a dimension's vocabulary includes the first
/// `count` own labels of another dimension, so training the donor teaches
/// weight rows the borrower also scores with. Margin and store size control
/// how fast a dimension learns from its own data.
struct DimRecipe {
  DimensionId dim;
  std::size_t own_labels = 4;
  std::vector<std::pair<std::size_t, std::size_t>> borrows;  // (dim index, count)
  double margin = 2.5;       // cluster separation of the feature sampler
  double noise = 1.0;        // isotropic feature noise
  double truth_scale = 2.0;  // weight scale of the generative score
  std::size_t train_size = 3000;
  std::size_t val_size = 60;
};

SyntheticSuite build_suite(const std::vector<DimRecipe>& recipes,
                           std::uint64_t seed);

/// Canonical 6-dim asymmetric-transfer fixture: dimension 0 is a strong
/// donor whose labels several others borrow, dimension 4 is a slow
/// low-resource recipient fed mostly by the donor, dimension 5 is isolated.
SyntheticSuite make_asymmetric_suite(std::uint64_t seed);

/// Minimal 3-dim fixture: "a" donates to the slow dimension "c"; "b" is
/// isolated.
SyntheticSuite make_three_dim_suite(std::uint64_t seed);

/// Suite over caller-provided dimension names: the canonical recipes for 6
/// or 3 dims, otherwise a generic donor-plus-borrowers pattern.
SyntheticSuite make_suite_for_dims(const std::vector<DimensionId>& dims,
                                   std::uint64_t seed);

struct TrainerOptions {
  int batch_size = 32;
  double learning_rate = 0.1;
};

/// Multinomial softmax learner over the universal label table. Rows are
/// shared across dimensions, so a dimension improves whenever any sampled
/// dimension trains labels it also uses.
struct LearnerState {
  std::size_t feature_dim = 0;
  std::vector<std::vector<double>> weights;  // per universal label
  std::vector<double> bias;                  // per universal label
  long steps = 0;
  long records_consumed = 0;
};

class SoftmaxTrainer : public DimensionTrainer {
 public:
  SoftmaxTrainer(const SyntheticSuite& suite, const TrainerOptions& options,
                 std::uint64_t seed);

  std::vector<DimensionId> dims() const override;

  /// K SGD steps; each step samples a dimension from p and draws a batch
  /// from its train store. Deterministic in (suite, options, seed).
  void train_steps(const std::vector<double>& p, int steps) override;

  ValidationSnapshot validate() override;

  double accuracy_on(const DimWorld& world,
                     const std::vector<AnnotatedExample>& records) const;
  double train_cross_entropy(const DimensionId& dim) const;

  const LearnerState& state() const { return state_; }

 private:
  void sgd_batch(const DimWorld& world);

  const SyntheticSuite* suite_;
  TrainerOptions options_;
  LearnerState state_;
  CounterRng rng_;
};

/// Probes the suite: base row from the untrained learner, one fresh learner
/// per source dimension trained for probe_steps, evaluated on every target.
TransferLedger compute_transfer_ledger(const SyntheticSuite& suite,
                                       const TrainerOptions& options,
                                       int probe_steps, std::uint64_t seed);

struct AblationConfig {
  std::vector<std::string> variants;  // see run_ablation
  int seeds = 20;
  std::uint64_t master_seed = 0;
  int n_dims = 6;             // 6 -> canonical suite, 3 -> small suite
  long total_steps = 1500;    // budget per trained model (schedule variants)
  int rounds = 30;            // reweighting rounds for the dynamic variant
  long budget_records = 4000; // record budget of the *_budget variants
  int probe_steps = 400;
  double alpha = 0.7;
  MixHyperparams hyper;
  TrainerOptions options;
  int workers = 1;
};

struct AblationVariantRow {
  std::string variant;
  std::vector<double> per_dim;  // median over seeds, per dimension
  double macro = 0.0;           // median over seeds of the per-seed macro
  double worst = 0.0;           // median over seeds of the per-seed minimum
  double second_worst = 0.0;
  std::vector<std::vector<double>> per_seed;  // [seed][dim] raw accuracies
};

struct AblationTable {
  std::vector<DimensionId> dims;
  std::vector<AblationVariantRow> rows;
  // Normalized per-dim medians vs. the agentshots_naive row, when present.
  std::optional<std::vector<AblationVariantRow>> normalized;
};

/// Variants: unishot, unishot_naive, agentshots, agentshots_naive,
/// target_only, homogeneous_budget, heterogeneous_budget. Every variant runs
/// on the same per-seed worlds and probe ledgers.
AblationTable run_ablation(const AblationConfig& config);

Json ablation_to_json(const AblationTable& table);
std::string ablation_to_text(const AblationTable& table);

}  // namespace shotmix
