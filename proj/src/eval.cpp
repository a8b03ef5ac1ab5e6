#include "shotmix/eval.hpp"

#include <algorithm>
#include <cctype>
#include <unordered_map>

#include "shotmix/error.hpp"

namespace shotmix {
namespace {

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

std::string fold(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s)
    out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  return out;
}

std::vector<std::string> split_segments(const std::string& text) {
  std::vector<std::string> segments;
  std::size_t start = 0;
  for (;;) {
    const std::size_t pos = text.find("&&", start);
    if (pos == std::string::npos) {
      segments.push_back(text.substr(start));
      return segments;
    }
    segments.push_back(text.substr(start, pos - start));
    start = pos + 2;
  }
}

}  // namespace

ParsedAnswer parse_prediction(const std::string& raw_text,
                              const std::vector<std::string>& options) {
  std::vector<std::string> folded_options;
  folded_options.reserve(options.size());
  for (const auto& o : options) folded_options.push_back(fold(trim(o)));

  ParsedAnswer parsed;
  for (const auto& segment : split_segments(raw_text)) {
    std::string text = trim(segment);
    if (text.empty()) continue;
    std::optional<std::size_t> letter_index;
    if (text.size() >= 3 &&
        std::isalpha(static_cast<unsigned char>(text[0])) && text[1] == '.' &&
        std::isspace(static_cast<unsigned char>(text[2]))) {
      letter_index = static_cast<std::size_t>(
          std::toupper(static_cast<unsigned char>(text[0])) - 'A');
      text = trim(text.substr(2));
    }
    if (text.empty()) continue;
    const std::string label = fold(text);
    if (letter_index) {
      const auto it =
          std::find(folded_options.begin(), folded_options.end(), label);
      if (it != folded_options.end() &&
          static_cast<std::size_t>(it - folded_options.begin()) != *letter_index)
        ++parsed.prefix_mismatches;
    }
    parsed.labels.insert(label);
  }
  parsed.parse_failure = parsed.labels.empty();
  return parsed;
}

ScoreOutcome score_one(const Prediction& pred, const QARecord& gold) {
  if (gold.is_caption)
    fail_invalid("score_one: caption records are training-only and not scored");
  const ParsedAnswer parsed = parse_prediction(pred.raw_text, gold.options);
  ScoreOutcome outcome;
  outcome.parse_failure = parsed.parse_failure;
  outcome.prefix_mismatches = parsed.prefix_mismatches;
  if (parsed.parse_failure) return outcome;

  std::set<std::string> want;
  for (const auto& a : gold.answer) want.insert(fold(trim(a)));
  outcome.correct = parsed.labels == want;
  return outcome;
}

bool score_match(const std::string& raw_text, const QARecord& gold) {
  return score_one({gold.id, raw_text}, gold).correct;
}

ScoreReport score_records(const std::vector<QARecord>& gold,
                          const std::vector<Prediction>& predictions) {
  std::unordered_map<std::string, const QARecord*> by_id;
  for (const auto& g : gold) by_id.emplace(g.id, &g);
  std::unordered_map<std::string, const Prediction*> preds;
  for (const auto& p : predictions) {
    if (!by_id.contains(p.qa_id))
      fail_invalid("score: prediction id '" + p.qa_id +
                   "' resolves to no gold record");
    if (!preds.emplace(p.qa_id, &p).second)
      fail_invalid("score: duplicate prediction for '" + p.qa_id + "'");
  }

  ScoreReport report;
  std::map<std::string, std::pair<std::size_t, std::size_t>> task_counts;
  std::map<std::string, std::string> task_to_dim;
  for (const auto& g : gold) {
    if (g.is_caption) {
      ++report.skipped_captions;
      continue;
    }
    auto& [correct, total] = task_counts[g.task_variant_id];
    task_to_dim[g.task_variant_id] = g.dimension;
    ++total;
    ++report.scored;
    const auto it = preds.find(g.id);
    if (it == preds.end()) {
      ++report.missing_predictions;
      continue;
    }
    const ScoreOutcome outcome = score_one(*it->second, g);
    if (outcome.parse_failure) ++report.parse_failures;
    report.prefix_mismatches +=
        static_cast<std::size_t>(outcome.prefix_mismatches);
    if (outcome.correct) {
      ++correct;
      ++report.correct;
    }
  }

  for (const auto& [task, counts] : task_counts)
    report.per_task_acc[task] =
        static_cast<double>(counts.first) / static_cast<double>(counts.second);
  if (!report.per_task_acc.empty()) {
    const Aggregate agg = aggregate(report.per_task_acc, task_to_dim);
    report.per_dim_macro = agg.per_dim_macro;
    report.avg_acc = agg.avg_acc;
  }
  return report;
}

Aggregate aggregate(const std::map<std::string, double>& per_task_acc,
                    const std::map<std::string, std::string>& task_to_dim) {
  if (per_task_acc.empty()) fail_invalid("aggregate: no task accuracies");
  Aggregate agg;
  std::map<std::string, std::pair<double, std::size_t>> dim_sums;
  double total = 0.0;
  for (const auto& [task, acc] : per_task_acc) {
    total += acc;
    const auto it = task_to_dim.find(task);
    if (it == task_to_dim.end())
      fail_invalid("aggregate: task '" + task + "' has no dimension mapping");
    auto& [sum, count] = dim_sums[it->second];
    sum += acc;
    ++count;
  }
  agg.avg_acc = total / static_cast<double>(per_task_acc.size());
  for (const auto& [dim, sums] : dim_sums)
    agg.per_dim_macro[dim] = sums.first / static_cast<double>(sums.second);
  return agg;
}

std::map<std::string, int> count_first(
    const std::map<std::string, std::map<std::string, double>>& per_method) {
  if (per_method.empty()) fail_invalid("count_first: no methods");
  const auto& reference = per_method.begin()->second;
  for (const auto& [method, accs] : per_method) {
    if (accs.size() != reference.size())
      fail_invalid("count_first: method '" + method + "' covers " +
                   std::to_string(accs.size()) + " tasks, expected " +
                   std::to_string(reference.size()));
    for (const auto& [task, acc] : reference)
      if (!accs.contains(task))
        fail_invalid("count_first: method '" + method + "' misses task '" +
                     task + "'");
  }

  std::map<std::string, int> firsts;
  for (const auto& [method, accs] : per_method) firsts[method] = 0;
  for (const auto& [task, acc] : reference) {
    double best = 0.0;
    for (const auto& [method, accs] : per_method)
      best = std::max(best, accs.at(task));
    for (const auto& [method, accs] : per_method)
      if (accs.at(task) >= best - 1e-12) ++firsts[method];
  }
  return firsts;
}

std::map<std::string, NormalizedEntry> normalize(
    const std::map<std::string, std::map<std::string, double>>& per_method,
    const std::string& baseline) {
  const auto base_it = per_method.find(baseline);
  if (base_it == per_method.end())
    fail_invalid("normalize: baseline method '" + baseline + "' not present");
  for (const auto& [dim, value] : base_it->second)
    if (value <= 0.0)
      fail_invalid("normalize: baseline entry for '" + dim + "' is zero");

  std::map<std::string, NormalizedEntry> out;
  for (const auto& [method, per_dim] : per_method) {
    NormalizedEntry entry;
    double sum = 0.0;
    std::vector<std::pair<double, std::string>> ranked;
    for (const auto& [dim, value] : per_dim) {
      const auto b = base_it->second.find(dim);
      if (b == base_it->second.end())
        fail_invalid("normalize: baseline misses dimension '" + dim + "'");
      const double normalized = value / b->second;
      entry.per_dim[dim] = normalized;
      sum += normalized;
      ranked.emplace_back(normalized, dim);
    }
    if (ranked.empty()) fail_invalid("normalize: empty method row");
    std::sort(ranked.begin(), ranked.end());
    entry.average = sum / static_cast<double>(ranked.size());
    entry.worst = ranked[0].first;
    entry.worst_dim = ranked[0].second;
    const auto& second = ranked.size() > 1 ? ranked[1] : ranked[0];
    entry.second_worst = second.first;
    entry.second_worst_dim = second.second;
    out.emplace(method, std::move(entry));
  }
  return out;
}

std::vector<Prediction> read_predictions(const std::string& path) {
  std::vector<Prediction> out;
  std::size_t line = 0;
  for (const auto& j : read_jsonl(path)) {
    const std::string ctx = path + ":" + std::to_string(++line);
    out.push_back(
        {require_string(j, "qa_id", ctx), require_string(j, "raw_text", ctx)});
  }
  return out;
}

Json score_report_to_json(const ScoreReport& report) {
  return Json{{"per_task_acc", report.per_task_acc},
              {"per_dim_macro", report.per_dim_macro},
              {"avg_acc", report.avg_acc},
              {"scored", report.scored},
              {"correct", report.correct},
              {"parse_failures", report.parse_failures},
              {"prefix_mismatches", report.prefix_mismatches},
              {"skipped_captions", report.skipped_captions},
              {"missing_predictions", report.missing_predictions}};
}

CompareReport compare_records(
    const std::vector<QARecord>& gold,
    const std::map<std::string, std::vector<Prediction>>& per_method,
    const std::optional<std::string>& baseline) {
  if (per_method.empty()) fail_invalid("compare: no prediction sets");
  CompareReport report;
  std::map<std::string, std::map<std::string, double>> per_task;
  std::map<std::string, std::map<std::string, double>> per_dim;
  for (const auto& [method, preds] : per_method) {
    ScoreReport score = score_records(gold, preds);
    per_task[method] = score.per_task_acc;
    per_dim[method] = score.per_dim_macro;
    report.methods.emplace(method, std::move(score));
  }
  report.count_first = count_first(per_task);
  if (baseline) report.normalized = normalize(per_dim, *baseline);
  return report;
}

Json compare_report_to_json(const CompareReport& report) {
  Json doc;
  for (const auto& [method, score] : report.methods)
    doc["methods"][method] = score_report_to_json(score);
  doc["count_first"] = report.count_first;
  if (report.normalized) {
    Json norm;
    for (const auto& [method, entry] : *report.normalized)
      norm[method] = Json{{"per_dim", entry.per_dim},
                          {"average", entry.average},
                          {"worst", entry.worst},
                          {"worst_dim", entry.worst_dim},
                          {"second_worst", entry.second_worst},
                          {"second_worst_dim", entry.second_worst_dim}};
    doc["normalized"] = norm;
  }
  return doc;
}

}  // namespace shotmix
