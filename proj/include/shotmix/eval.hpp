#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "shotmix/json_util.hpp"
#include "shotmix/qa.hpp"

namespace shotmix {

struct Prediction {
  std::string qa_id;
  std::string raw_text;
};

struct ParsedAnswer {
  std::set<std::string> labels;  // trimmed, case-folded, prefix-stripped
  bool parse_failure = false;    // nothing extractable from the text
  int prefix_mismatches = 0;     // letter prefix disagrees with the option slot
};

/// Splits on " && ", trims, strips an optional "X. " letter prefix, and
/// case-folds. Options are used only to flag prefix/position mismatches.
ParsedAnswer parse_prediction(const std::string& raw_text,
                              const std::vector<std::string>& options);

struct ScoreOutcome {
  bool correct = false;
  bool parse_failure = false;
  int prefix_mismatches = 0;
};

/// Exact set match between the parsed prediction and the gold label set;
/// order-free, all labels must be present. Caption gold is refused.
ScoreOutcome score_one(const Prediction& pred, const QARecord& gold);
bool score_match(const std::string& raw_text, const QARecord& gold);

struct ScoreReport {
  std::map<std::string, double> per_task_acc;
  std::map<std::string, double> per_dim_macro;
  double avg_acc = 0.0;
  std::size_t scored = 0;
  std::size_t correct = 0;
  std::size_t parse_failures = 0;
  std::size_t prefix_mismatches = 0;
  std::size_t skipped_captions = 0;
  std::size_t missing_predictions = 0;
};

/// Scores every classification gold record; captions are skipped with a
/// tally, missing predictions score as incorrect. Predictions whose qa_id
/// resolves to no gold record are an error.
ScoreReport score_records(const std::vector<QARecord>& gold,
                          const std::vector<Prediction>& predictions);

struct Aggregate {
  std::map<std::string, double> per_dim_macro;
  double avg_acc = 0.0;
};

/// Unweighted mean across tasks plus per-dimension macro averages.
Aggregate aggregate(const std::map<std::string, double>& per_task_acc,
                    const std::map<std::string, std::string>& task_to_dim);

/// Per task, every method achieving the maximum accuracy gets credit, so
/// ties award multiple firsts. All methods must cover the same tasks.
std::map<std::string, int> count_first(
    const std::map<std::string, std::map<std::string, double>>& per_method);

struct NormalizedEntry {
  std::map<std::string, double> per_dim;  // value / baseline value
  double average = 0.0;
  double worst = 0.0;
  std::string worst_dim;
  double second_worst = 0.0;
  std::string second_worst_dim;
};

/// Dimension-level scores divided by a named baseline method; also reports
/// the average, worst, and second-worst normalized entries per method.
std::map<std::string, NormalizedEntry> normalize(
    const std::map<std::string, std::map<std::string, double>>& per_method,
    const std::string& baseline);

std::vector<Prediction> read_predictions(const std::string& path);

Json score_report_to_json(const ScoreReport& report);

struct CompareReport {
  std::map<std::string, ScoreReport> methods;
  std::map<std::string, int> count_first;
  std::optional<std::map<std::string, NormalizedEntry>> normalized;
};

CompareReport compare_records(
    const std::vector<QARecord>& gold,
    const std::map<std::string, std::vector<Prediction>>& per_method,
    const std::optional<std::string>& baseline);

Json compare_report_to_json(const CompareReport& report);

}  // namespace shotmix
