#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "shotmix/json_util.hpp"
#include "shotmix/transfer.hpp"

namespace shotmix {

/// Static per-target mixture: alpha mass on the target, gain-proportional
/// mass on the beneficial sources, zero elsewhere.
struct TargetMix {
  DimensionId target;
  double alpha = 0.7;
  std::vector<DimensionId> beneficial;       // S_d, in ledger dim order
  std::map<DimensionId, double> q;           // auxiliary weights over S_d
  std::map<DimensionId, double> p;           // final sampling distribution
};

struct ExpertCard {
  DimensionId dim;
  std::string description;  // scope blurb: the dimension's task list
};

struct RouteScore {
  DimensionId dim;
  double score = 0.0;
  std::vector<std::string> matched_tokens;
};

struct RouteResult {
  std::optional<DimensionId> dim;  // empty: unroutable (all-zero scores)
  std::vector<RouteScore> scores;  // one per card, canonical order
};

/// S_d = {i != d : A[i][d] > base[d]}; q proportional to the raw gains;
/// p puts alpha on the target and (1-alpha)q on the sources. Falls back to
/// target-only when no source beats the baseline.
TargetMix build_target_mix(const TransferLedger& ledger,
                           const DimensionId& target, double alpha);

std::map<DimensionId, TargetMix> build_all_mixes(const TransferLedger& ledger,
                                                 double alpha = 0.7);

/// Cards for the six canonical dimensions; descriptions cover each
/// dimension's task list and label vocabulary.
const std::vector<ExpertCard>& builtin_expert_cards();

std::vector<ExpertCard> parse_expert_cards(const Json& doc, const std::string& ctx);

/// Deterministic lexical router: picks the card with the highest normalized
/// token overlap against the query (case-folded, punctuation stripped, stop
/// words removed). Ties break by canonical dimension order, so the outcome
/// is independent of card ordering.
RouteResult route(const std::string& query, const std::vector<ExpertCard>& cards);

Json target_mix_to_json(const TargetMix& mix);
Json route_result_to_json(const RouteResult& result);

/// Tokenization used by the router, exposed for tests and audits.
std::vector<std::string> route_tokens(const std::string& text);

}  // namespace shotmix
