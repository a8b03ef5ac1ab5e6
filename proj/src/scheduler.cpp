#include "shotmix/scheduler.hpp"

#include <cmath>
#include <sstream>

#include "shotmix/error.hpp"

namespace shotmix {

void MixHyperparams::validate() const {
  if (!(lambda >= 0.0 && lambda <= 1.0))
    fail_invalid("hyperparams: lambda must be in [0,1]");
  if (!(beta > 0.0 && beta <= 1.0))
    fail_invalid("hyperparams: beta must be in (0,1]");
  if (steps_per_round < 1) fail_invalid("hyperparams: K must be >= 1");
  if (!(eps > 0.0) || !std::isfinite(eps))
    fail_invalid("hyperparams: eps must be positive");
}

void MixState::validate() const {
  if (dims.empty()) fail_invalid("mix state: no dimensions");
  if (p.size() != dims.size()) fail_invalid("mix state: p length mismatch");
  double sum = 0.0;
  for (double v : p) {
    if (!(v >= 0.0) || !std::isfinite(v))
      fail_invalid("mix state: p entries must be nonnegative");
    sum += v;
  }
  if (std::abs(sum - 1.0) > 1e-12)
    fail_invalid("mix state: p must sum to 1");
  if (static_cast<int>(history.size()) != round)
    fail_invalid("mix state: history length must equal round");
}

MixState init_state(const std::vector<DimensionId>& dims,
                    const MixHyperparams& hyper) {
  hyper.validate();
  if (dims.empty()) fail_invalid("init_state: dims must be nonempty");
  MixState state;
  state.dims = dims;
  state.p.assign(dims.size(), 1.0 / static_cast<double>(dims.size()));
  state.round = 0;
  return state;
}

std::vector<double> compute_gaps(const ValidationSnapshot& snapshot,
                                 const std::vector<double>& anchors,
                                 double eps) {
  if (snapshot.scores.size() != anchors.size())
    fail_invalid("compute_gaps: score/anchor length mismatch");
  std::vector<double> gaps(anchors.size());
  for (std::size_t j = 0; j < anchors.size(); ++j) {
    if (anchors[j] < 0.0)
      fail_invalid("compute_gaps: anchors must be nonnegative");
    const double v = snapshot.scores[j];
    if (!(v >= 0.0 && v <= 1.0))
      fail_invalid("compute_gaps: validation scores must be in [0,1]");
    gaps[j] = std::max(0.0, 1.0 - v / (anchors[j] + eps));
  }
  return gaps;
}

void update_distribution(MixState& state, const std::vector<double>& gaps,
                         const TransferPrior& prior,
                         const MixHyperparams& hyper) {
  hyper.validate();
  state.validate();
  const std::size_t n = state.dims.size();
  if (gaps.size() != n) fail_invalid("update_distribution: gap length mismatch");
  if (prior.dims != state.dims)
    fail_invalid("update_distribution: prior dims do not match state dims");
  for (double g : gaps)
    if (g < 0.0)
      fail_invalid("update_distribution: gaps must be nonnegative (post-clamp)");

  std::vector<double> utility(n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      utility[i] += prior.Ttilde[i][j] * gaps[j];

  double u_sum = 0.0;
  for (double u : utility) u_sum += u;

  // Exploration/adaptation blend. Because of eps the raw values sum to
  // slightly under 1 (and to 1-lambda when u == 0), so renormalize by the
  // actual sum, which preserves the relative proportions.
  std::vector<double> target(n);
  double target_sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    target[i] = (1.0 - hyper.lambda) / static_cast<double>(n) +
                hyper.lambda * utility[i] / (u_sum + hyper.eps);
    target_sum += target[i];
  }
  for (double& t : target) t /= target_sum;

  MixRound entry;
  entry.round = state.round;
  entry.gaps = gaps;
  entry.utility = utility;
  for (std::size_t i = 0; i < n; ++i)
    state.p[i] = (1.0 - hyper.beta) * state.p[i] + hyper.beta * target[i];
  entry.p = state.p;
  state.history.push_back(std::move(entry));
  ++state.round;
  state.validate();
}

DimensionId sample_dimension(const MixState& state, CounterRng& rng) {
  state.validate();
  return state.dims[rng.next_categorical(state.p)];
}

ScheduleResult run_schedule(DimensionTrainer& trainer,
                            const TransferLedger& ledger,
                            const MixHyperparams& hyper, int total_rounds) {
  hyper.validate();
  if (total_rounds < 0) fail_invalid("run_schedule: total_rounds must be >= 0");
  const auto dims = trainer.dims();
  if (ledger.dims != dims)
    fail_invalid("run_schedule: ledger dims do not match trainer dims");
  const TransferPrior prior = compute_prior(ledger);

  ScheduleResult result;
  result.state = init_state(dims, hyper);
  for (int t = 0; t < total_rounds; ++t) {
    try {
      trainer.train_steps(result.state.p, hyper.steps_per_round);
      ValidationSnapshot snapshot = trainer.validate();
      snapshot.round = t;
      const auto gaps = compute_gaps(snapshot, ledger.anchors, hyper.eps);
      update_distribution(result.state, gaps, prior, hyper);
      result.state.history.back().validation = snapshot.scores;
      result.snapshots.push_back(std::move(snapshot));
    } catch (const Error& e) {
      throw Error(e.code(), "schedule round " + std::to_string(t) + ": " +
                                std::string(e.what()));
    }
  }
  return result;
}

std::string schedule_trace_jsonl(const MixState& state) {
  std::ostringstream out;
  for (const auto& r : state.history) {
    Json line;
    line["round"] = r.round;
    line["p"] = r.p;
    line["g"] = r.gaps;
    line["u"] = r.utility;
    line["V"] = r.validation;
    out << line.dump() << '\n';
  }
  return out.str();
}

Json mix_state_to_json(const MixState& state) {
  Json doc;
  doc["dims"] = state.dims;
  doc["p"] = state.p;
  doc["round"] = state.round;
  return doc;
}

}  // namespace shotmix
