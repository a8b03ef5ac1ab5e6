#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "shotmix/json_util.hpp"
#include "shotmix/rng.hpp"
#include "shotmix/transfer.hpp"

namespace shotmix {

struct MixHyperparams {
  double lambda = 0.5;  // exploration vs. adaptive weight, in [0, 1]
  double beta = 0.3;    // update smoothness, in (0, 1]
  int steps_per_round = 200;  // K: trainer steps between reweighting rounds
  double eps = 1e-8;

  void validate() const;
};

struct ValidationSnapshot {
  std::vector<double> scores;  // per-dimension accuracy in [0, 1]
  int round = 0;
};

struct MixRound {
  int round = 0;
  std::vector<double> validation;  // V at the start of the update
  std::vector<double> gaps;        // g
  std::vector<double> utility;     // u
  std::vector<double> p;           // distribution after the update
};

/// Sampling distribution over dimensions plus the full update history.
/// Mutated only between training rounds by a single owner; sampling reads an
/// immutable copy of p.
struct MixState {
  std::vector<DimensionId> dims;
  std::vector<double> p;
  int round = 0;
  std::vector<MixRound> history;

  void validate() const;
};

MixState init_state(const std::vector<DimensionId>& dims,
                    const MixHyperparams& hyper);

/// g_j = max(0, 1 - V_j / (anchors_j + eps)).
std::vector<double> compute_gaps(const ValidationSnapshot& snapshot,
                                 const std::vector<double>& anchors,
                                 double eps);

/// One reweighting round: utility from the transfer prior and gaps, blend
/// with uniform exploration, renormalize, then smooth toward the previous
/// distribution. Appends to history and bumps the round counter.
void update_distribution(MixState& state, const std::vector<double>& gaps,
                         const TransferPrior& prior,
                         const MixHyperparams& hyper);

DimensionId sample_dimension(const MixState& state, CounterRng& rng);

/// Trainer side of the schedule contract.
class DimensionTrainer {
 public:
  virtual ~DimensionTrainer() = default;
  virtual std::vector<DimensionId> dims() const = 0;
  virtual void train_steps(const std::vector<double>& p, int steps) = 0;
  virtual ValidationSnapshot validate() = 0;
};

struct ScheduleResult {
  MixState state;
  std::vector<ValidationSnapshot> snapshots;  // one per round, pre-update
};

/// Runs total_rounds reweighting rounds of K trainer steps each. Anchors are
/// taken from the ledger; the ledger must cover exactly the trainer's dims.
ScheduleResult run_schedule(DimensionTrainer& trainer,
                            const TransferLedger& ledger,
                            const MixHyperparams& hyper, int total_rounds);

/// One {round, p, g, u, V} JSON object per round, LF-separated.
std::string schedule_trace_jsonl(const MixState& state);

Json mix_state_to_json(const MixState& state);

}  // namespace shotmix
