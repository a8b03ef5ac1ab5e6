#include "shotmix/transfer.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "shotmix/error.hpp"

namespace shotmix {

const std::vector<DimensionId>& canonical_dimensions() {
  static const std::vector<DimensionId> dims = {
      "lighting", "composition", "viewpoint", "coverage", "motion", "cuts"};
  return dims;
}

std::size_t TransferLedger::index_of(const DimensionId& dim) const {
  auto it = std::find(dims.begin(), dims.end(), dim);
  if (it == dims.end())
    fail_invalid("dimension '" + dim + "' not present in ledger");
  return static_cast<std::size_t>(it - dims.begin());
}

void TransferLedger::validate() const {
  const std::size_t n = dims.size();
  if (n == 0) fail_invalid("ledger: dims must be nonempty");
  std::set<DimensionId> seen;
  for (const auto& d : dims) {
    if (d.empty()) fail_invalid("ledger: empty dimension id");
    if (!seen.insert(d).second)
      fail_invalid("ledger: duplicate dimension id '" + d + "'");
  }
  if (A.size() != n)
    fail_invalid("ledger: matrix has " + std::to_string(A.size()) +
                 " rows, expected " + std::to_string(n));
  for (std::size_t i = 0; i < n; ++i) {
    if (A[i].size() != n)
      fail_invalid("ledger: row " + std::to_string(i) + " has " +
                   std::to_string(A[i].size()) + " columns, expected " +
                   std::to_string(n));
    for (std::size_t j = 0; j < n; ++j) {
      const double v = A[i][j];
      if (!std::isfinite(v) || v < 0.0 || v > 1.0)
        fail_invalid("ledger: A[" + std::to_string(i) + "][" +
                     std::to_string(j) + "] = " + std::to_string(v) +
                     " outside [0,1]");
    }
  }
  if (base.size() != n)
    fail_invalid("ledger: base has " + std::to_string(base.size()) +
                 " entries, expected " + std::to_string(n));
  if (anchors.size() != n)
    fail_invalid("ledger: anchors has " + std::to_string(anchors.size()) +
                 " entries, expected " + std::to_string(n));
  for (std::size_t j = 0; j < n; ++j) {
    if (!std::isfinite(base[j]) || base[j] < 0.0 || base[j] > 1.0)
      fail_invalid("ledger: base[" + std::to_string(j) + "] outside [0,1]");
    if (!std::isfinite(anchors[j]) || anchors[j] < 0.0 || anchors[j] > 1.0)
      fail_invalid("ledger: anchors[" + std::to_string(j) + "] outside [0,1]");
    if (std::abs(anchors[j] - A[j][j]) > 1e-12)
      fail_invalid("ledger: anchors[" + std::to_string(j) +
                   "] does not match diagonal A[j][j]");
  }
  if (!(eps > 0.0) || !std::isfinite(eps))
    fail_invalid("ledger: eps must be a positive finite number");
}

TransferPrior compute_prior(const TransferLedger& ledger) {
  ledger.validate();
  const std::size_t n = ledger.size();
  TransferPrior prior;
  prior.dims = ledger.dims;
  prior.T.assign(n, std::vector<double>(n, 0.0));
  prior.Ttilde.assign(n, std::vector<double>(n, 0.0));

  for (std::size_t j = 0; j < n; ++j) {
    const double margin = ledger.anchors[j] - ledger.base[j];
    if (margin <= 0.0) continue;  // no-prior target: column stays zero
    for (std::size_t i = 0; i < n; ++i) {
      const double gain = ledger.A[i][j] - ledger.base[j];
      prior.T[i][j] = std::max(0.0, gain / (margin + ledger.eps));
    }
    double col_sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) col_sum += prior.T[i][j];
    for (std::size_t i = 0; i < n; ++i)
      prior.Ttilde[i][j] = prior.T[i][j] / (col_sum + ledger.eps);
  }
  return prior;
}

TransferSummary summarize_transfer(const TransferLedger& ledger) {
  ledger.validate();
  const std::size_t n = ledger.size();
  if (n < 2)
    fail_invalid("summarize_transfer: needs at least 2 dimensions, got " +
                 std::to_string(n));

  TransferSummary summary;
  summary.dims = ledger.dims;
  summary.per_dim.resize(n);
  const double off_diag = static_cast<double>(n - 1);

  for (std::size_t d = 0; d < n; ++d) {
    auto& stats = summary.per_dim[d];
    double in_gain = 0.0, out_gain = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      if (k == d) continue;
      const double incoming = ledger.A[k][d] - ledger.base[d];
      const double outgoing = ledger.A[d][k] - ledger.base[k];
      if (incoming > 0.0) ++stats.incoming_positive_count;
      if (outgoing > 0.0) ++stats.outgoing_positive_count;
      in_gain += incoming;
      out_gain += outgoing;
    }
    stats.mean_incoming_gain = in_gain / off_diag;
    stats.mean_outgoing_gain = out_gain / off_diag;
  }
  return summary;
}

LedgerLoadResult parse_ledger(const Json& doc, const std::string& ctx) {
  LedgerLoadResult result;
  TransferLedger& ledger = result.ledger;
  ledger.dims = require_string_array(doc, "dims", ctx);
  const std::size_t n = ledger.dims.size();

  const Json& rows = require_field(doc, "A", ctx);
  if (!rows.is_array() || rows.size() != n)
    fail_parse(ctx + ": 'A' must be an array of " + std::to_string(n) + " rows");
  ledger.A.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Json& row = rows[i];
    if (!row.is_array() || row.size() != n)
      fail_parse(ctx + ": 'A' row " + std::to_string(i) + " must have " +
                 std::to_string(n) + " columns");
    ledger.A[i].resize(n);
    for (std::size_t j = 0; j < n; ++j) {
      if (!row[j].is_number())
        fail_parse(ctx + ": 'A' entry at row " + std::to_string(i) +
                   ", column " + std::to_string(j) + " is not a number");
      const double v = row[j].get<double>();
      if (!std::isfinite(v) || v < 0.0 || v > 1.0)
        fail_parse(ctx + ": 'A' entry at row " + std::to_string(i) +
                   ", column " + std::to_string(j) + " outside [0,1]");
      ledger.A[i][j] = v;
    }
  }

  ledger.base = require_number_array(doc, "base", ctx);
  if (doc.contains("anchors")) {
    ledger.anchors = require_number_array(doc, "anchors", ctx);
  } else {
    ledger.anchors.resize(n);
    for (std::size_t j = 0; j < n; ++j) ledger.anchors[j] = ledger.A[j][j];
    result.warnings.push_back(
        "anchors missing: defaulted to the diagonal of A");
  }
  if (doc.contains("eps")) {
    const Json& e = doc.at("eps");
    if (!e.is_number()) fail_parse(ctx + ": 'eps' must be a number");
    ledger.eps = e.get<double>();
  }

  try {
    ledger.validate();
  } catch (const Error& e) {
    fail_parse(ctx + ": " + e.what());
  }
  return result;
}

LedgerLoadResult load_ledger(const std::string& path) {
  return parse_ledger(parse_json(read_text_file(path), path), path);
}

Json ledger_to_json(const TransferLedger& ledger) {
  // nlohmann objects keep keys sorted, so field ordering is deterministic.
  Json doc;
  doc["dims"] = ledger.dims;
  doc["A"] = ledger.A;
  doc["base"] = ledger.base;
  doc["anchors"] = ledger.anchors;
  doc["eps"] = ledger.eps;
  return doc;
}

void save_ledger(const TransferLedger& ledger, const std::string& path) {
  ledger.validate();
  write_text_file(path, ledger_to_json(ledger).dump(2) + "\n");
}

std::string ledger_matrix_csv(const TransferLedger& ledger) {
  ledger.validate();
  std::ostringstream out;
  out << "source\\target";
  for (const auto& d : ledger.dims) out << ',' << d;
  out << '\n';
  for (std::size_t i = 0; i < ledger.size(); ++i) {
    out << ledger.dims[i];
    for (std::size_t j = 0; j < ledger.size(); ++j) {
      out << ',' << Json(ledger.A[i][j]).dump();
    }
    out << '\n';
  }
  return out.str();
}

Json prior_to_json(const TransferPrior& prior) {
  Json doc;
  doc["dims"] = prior.dims;
  doc["T"] = prior.T;
  doc["Ttilde"] = prior.Ttilde;
  return doc;
}

Json summary_to_json(const TransferSummary& summary) {
  Json doc;
  doc["dims"] = summary.dims;
  Json rows = Json::array();
  for (std::size_t d = 0; d < summary.dims.size(); ++d) {
    const auto& s = summary.per_dim[d];
    rows.push_back(Json{{"dim", summary.dims[d]},
                        {"incoming_positive_count", s.incoming_positive_count},
                        {"mean_incoming_gain", s.mean_incoming_gain},
                        {"outgoing_positive_count", s.outgoing_positive_count},
                        {"mean_outgoing_gain", s.mean_outgoing_gain}});
  }
  doc["per_dim"] = rows;
  return doc;
}

}  // namespace shotmix
