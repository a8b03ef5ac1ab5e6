#pragma once

#include <string>
#include <vector>

#include "shotmix/json_util.hpp"

namespace shotmix {

using DimensionId = std::string;

/// The six canonical shot-language dimensions, in canonical order. Ledgers
/// may use arbitrary dimension ids; the canonical set matters for routing
/// tie-breaks and shipped description cards.
const std::vector<DimensionId>& canonical_dimensions();

/// Source -> target accuracy matrix A plus the pretrained baseline row and
/// the target-only anchors (diagonal of A).
struct TransferLedger {
  std::vector<DimensionId> dims;
  std::vector<std::vector<double>> A;  // A[i][j]: train on i, evaluate on j
  std::vector<double> base;            // base[j]: untrained model on j
  std::vector<double> anchors;         // anchors[j] == A[j][j]
  double eps = 1e-8;

  std::size_t size() const { return dims.size(); }
  std::size_t index_of(const DimensionId& dim) const;  // throws if absent

  /// Full structural validation; throws InvalidArgument on violation.
  void validate() const;
};

/// Normalized positive transfer gains. T is the clamped, anchor-normalized
/// gain; Ttilde normalizes each target column across sources.
struct TransferPrior {
  std::vector<DimensionId> dims;
  std::vector<std::vector<double>> T;
  std::vector<std::vector<double>> Ttilde;
};

struct DimensionTransferStats {
  int incoming_positive_count = 0;
  double mean_incoming_gain = 0.0;
  int outgoing_positive_count = 0;
  double mean_outgoing_gain = 0.0;
};

struct TransferSummary {
  std::vector<DimensionId> dims;
  std::vector<DimensionTransferStats> per_dim;
};

/// T[i][j] = max(0, (A[i][j] - base[j]) / (anchors[j] - base[j] + eps)),
/// with the whole column zeroed when the target margin anchors[j] - base[j]
/// is non-positive. Ttilde[i][j] = T[i][j] / (sum_k T[k][j] + eps).
TransferPrior compute_prior(const TransferLedger& ledger);

/// Off-diagonal positive-transfer counts and mean gains, per dimension, on
/// both the incoming (column) and outgoing (row) side. Requires >= 2 dims.
TransferSummary summarize_transfer(const TransferLedger& ledger);

struct LedgerLoadResult {
  TransferLedger ledger;
  std::vector<std::string> warnings;  // e.g. anchors defaulted from diagonal
};

LedgerLoadResult parse_ledger(const Json& doc, const std::string& ctx);
LedgerLoadResult load_ledger(const std::string& path);
Json ledger_to_json(const TransferLedger& ledger);
void save_ledger(const TransferLedger& ledger, const std::string& path);

/// Matrix block as CSV with a header row and column of dimension ids.
std::string ledger_matrix_csv(const TransferLedger& ledger);

Json prior_to_json(const TransferPrior& prior);
Json summary_to_json(const TransferSummary& summary);

}  // namespace shotmix
