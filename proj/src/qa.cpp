#include "shotmix/qa.hpp"

#include <algorithm>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "shotmix/error.hpp"
#include "shotmix/rng.hpp"

namespace shotmix {

std::string to_string(Modality m) {
  return m == Modality::Image ? "image" : "video";
}

std::string to_string(AnnotationKind k) {
  switch (k) {
    case AnnotationKind::SingleLabel: return "single_label";
    case AnnotationKind::LabelSet: return "label_set";
    case AnnotationKind::Binary: return "binary";
    case AnnotationKind::Caption: return "caption";
  }
  fail_invalid("unknown annotation kind");
}

std::string to_string(Split s) {
  switch (s) {
    case Split::Unassigned: return "unassigned";
    case Split::Train: return "train";
    case Split::Val: return "val";
    case Split::IdTest: return "id_test";
    case Split::OodTest: return "ood_test";
  }
  fail_invalid("unknown split");
}

namespace {

Modality modality_from_string(const std::string& s, const std::string& ctx) {
  if (s == "image") return Modality::Image;
  if (s == "video") return Modality::Video;
  fail_parse(ctx + ": modality must be 'image' or 'video', got '" + s + "'");
}

AnnotationKind kind_from_string(const std::string& s, const std::string& ctx) {
  if (s == "single_label") return AnnotationKind::SingleLabel;
  if (s == "label_set") return AnnotationKind::LabelSet;
  if (s == "binary") return AnnotationKind::Binary;
  if (s == "caption") return AnnotationKind::Caption;
  fail_parse(ctx + ": unknown annotation kind '" + s + "'");
}

Split split_from_string(const std::string& s, const std::string& ctx) {
  if (s == "train") return Split::Train;
  if (s == "val") return Split::Val;
  if (s == "id_test") return Split::IdTest;
  if (s == "ood_test") return Split::OodTest;
  fail_parse(ctx + ": unknown split '" + s + "'");
}

std::string record_key(const RawRecord& r) {
  return r.source_id + ":" + r.media_id + ":" + r.task_variant_id;
}

}  // namespace

void RawRecord::validate() const {
  const std::string ctx = "record " + record_key(*this);
  if (media_hash.empty()) fail_invalid(ctx + ": media_hash must be nonempty");
  if (media_id.empty()) fail_invalid(ctx + ": media_id must be nonempty");
  if (source_id.empty()) fail_invalid(ctx + ": source_id must be nonempty");
  if (task_variant_id.empty()) fail_invalid(ctx + ": task id must be nonempty");
  if (dimension.empty()) fail_invalid(ctx + ": dimension must be nonempty");

  switch (kind) {
    case AnnotationKind::SingleLabel:
    case AnnotationKind::Binary: {
      if (kind == AnnotationKind::Binary && options.size() != 2)
        fail_invalid(ctx + ": binary records need exactly 2 options");
      if (options.empty()) fail_invalid(ctx + ": options must be nonempty");
      if (answers.size() != 1)
        fail_invalid(ctx + ": exactly one answer label expected");
      break;
    }
    case AnnotationKind::LabelSet: {
      if (options.empty()) fail_invalid(ctx + ": options must be nonempty");
      if (answers.empty()) fail_invalid(ctx + ": answer label set is empty");
      break;
    }
    case AnnotationKind::Caption: {
      if (!options.empty())
        fail_invalid(ctx + ": caption records carry no options");
      if (answers.size() != 1 || answers[0].empty())
        fail_invalid(ctx + ": caption records need one nonempty caption");
      if (!caption_templates().contains(caption_template_id))
        fail_invalid(ctx + ": unknown caption template '" +
                     caption_template_id + "'");
      return;
    }
  }
  if (question.empty()) fail_invalid(ctx + ": question must be nonempty");
  for (const auto& a : answers)
    if (std::find(options.begin(), options.end(), a) == options.end())
      fail_invalid(ctx + ": answer '" + a + "' not among the options");
}

const std::map<std::string, std::string>& caption_templates() {
  static const std::map<std::string, std::string> templates = {
      {"camera_motion_question", "How does the camera move in this video?"},
      {"camera_motion_summary", "Summarize the camera movement in this video."},
  };
  return templates;
}

std::string render_prompt(const RawRecord& record) {
  record.validate();
  std::ostringstream out;
  out << (record.modality == Modality::Image ? "<image>" : "<video>") << '\n';
  out << "You are a cinematography expert.\n";
  if (record.kind == AnnotationKind::Caption) {
    out << "Question: " << caption_templates().at(record.caption_template_id);
    return out.str();
  }
  if (record.options.size() > 26)
    fail_invalid("render_prompt: more than 26 options");
  for (const auto& opt : record.options)
    if (opt.empty()) fail_invalid("render_prompt: empty option text");
  out << "Question: " << record.question << '\n';
  out << "Options:\n";
  for (std::size_t i = 0; i < record.options.size(); ++i)
    out << static_cast<char>('A' + i) << ". " << record.options[i] << '\n';
  out << "If multiple options are correct, connect them with ' && '.\n";
  out << "Respond with 'Letter. OptionText' (for multiple: 'A. ... && B. ...').";
  return out.str();
}

std::string format_answer(const std::vector<std::string>& labels,
                          const std::vector<std::string>& options) {
  if (labels.empty()) fail_invalid("format_answer: empty label list");
  if (options.size() > 26) fail_invalid("format_answer: more than 26 options");
  std::vector<std::size_t> positions;
  for (const auto& label : labels) {
    auto it = std::find(options.begin(), options.end(), label);
    if (it == options.end())
      fail_invalid("format_answer: label '" + label + "' not among the options");
    positions.push_back(static_cast<std::size_t>(it - options.begin()));
  }
  std::sort(positions.begin(), positions.end());
  positions.erase(std::unique(positions.begin(), positions.end()),
                  positions.end());
  std::ostringstream out;
  for (std::size_t i = 0; i < positions.size(); ++i) {
    if (i > 0) out << " && ";
    out << static_cast<char>('A' + positions[i]) << ". "
        << options[positions[i]];
  }
  return out.str();
}

std::pair<std::vector<RawRecord>, DedupReport> dedup(
    std::vector<RawRecord> records) {
  // Keeper per hash: lexicographically smallest (source, media, task).
  std::unordered_map<std::string, std::size_t> keeper;
  for (std::size_t i = 0; i < records.size(); ++i) {
    auto [it, inserted] = keeper.try_emplace(records[i].media_hash, i);
    if (inserted) continue;
    const auto& held = records[it->second];
    const auto& cand = records[i];
    const auto held_key = std::tie(held.source_id, held.media_id,
                                   held.task_variant_id);
    const auto cand_key = std::tie(cand.source_id, cand.media_id,
                                   cand.task_variant_id);
    if (cand_key < held_key) it->second = i;
  }

  DedupReport report;
  std::vector<RawRecord> kept;
  kept.reserve(keeper.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (keeper.at(records[i].media_hash) == i) {
      kept.push_back(std::move(records[i]));
    } else {
      ++report.dropped;
      ++report.dropped_per_source[records[i].source_id];
    }
  }
  report.kept = kept.size();
  return {std::move(kept), report};
}

const ContentFilter& pass_all_filter() {
  static const ContentFilter filter = [](const RawRecord&) { return true; };
  return filter;
}

std::pair<std::vector<QARecord>, IngestReport> ingest(
    std::vector<RawRecord> records, const ContentFilter& filter) {
  IngestReport report;
  report.input = records.size();
  for (const auto& r : records) r.validate();

  std::vector<RawRecord> retained;
  retained.reserve(records.size());
  for (auto& r : records) {
    if (filter(r))
      retained.push_back(std::move(r));
    else
      ++report.filtered;
  }

  auto [kept, dedup_report] = dedup(std::move(retained));
  report.dedup = dedup_report;

  std::vector<QARecord> unified;
  std::set<std::string> ids;
  for (auto& raw : kept) {
    QARecord qa;
    qa.id = record_key(raw);
    if (!ids.insert(qa.id).second)
      fail_invalid("ingest: duplicate record id '" + qa.id + "'");
    qa.media_id = raw.media_id;
    qa.media_hash = raw.media_hash;
    qa.modality = raw.modality;
    qa.source_id = raw.source_id;
    qa.task_variant_id = raw.task_variant_id;
    qa.dimension = raw.dimension;
    qa.is_caption = raw.kind == AnnotationKind::Caption;
    qa.question_text = render_prompt(raw);
    if (qa.is_caption) {
      qa.answer = raw.answers;
      ++report.captions;
    } else {
      qa.options = raw.options;
      // Canonical option-letter order for the stored label set.
      std::vector<std::size_t> positions;
      for (const auto& a : raw.answers) {
        auto it = std::find(raw.options.begin(), raw.options.end(), a);
        positions.push_back(static_cast<std::size_t>(it - raw.options.begin()));
      }
      std::sort(positions.begin(), positions.end());
      positions.erase(std::unique(positions.begin(), positions.end()),
                      positions.end());
      for (std::size_t p : positions) qa.answer.push_back(raw.options[p]);
    }
    unified.push_back(std::move(qa));
  }
  report.unified = unified.size();
  return {std::move(unified), report};
}

void SplitPlan::validate() const {
  std::set<std::string> seen;
  auto check = [&](const std::vector<std::string>& tasks, const char* which) {
    for (const auto& t : tasks) {
      if (t.empty()) fail_invalid("split plan: empty task id");
      if (!seen.insert(t).second)
        fail_invalid("split plan: task '" + t + "' appears in more than one "
                     "partition (" + which + ")");
    }
  };
  check(ood_tasks, "ood");
  check(id_tasks, "id");
  check(train_only_tasks, "train_only");
  if (!(id_ratio > 0.0 && id_ratio < 1.0))
    fail_invalid("split plan: id_ratio must be in (0,1)");
  if (val_per_task < 0) fail_invalid("split plan: val_per_task must be >= 0");
}

const SplitPlan& default_split_plan() {
  static const SplitPlan plan = [] {
    SplitPlan p;
    p.ood_tasks = {"CompositionPattern", "ScaleClassic",  "FocalLength",
                   "AngleExtended",      "MoveCompoundB", "VQAMovement",
                   "VQAComplexity",      "VQAShaking",    "VQASpeed",
                   "LightingStyle",      "ColorPalette"};
    p.id_tasks = {"CompositionRule", "ScaleExtended", "ScaleHistorical",
                  "ScaleCartoon",    "ScaleBasic",    "Staging",
                  "AngleBasic",      "AngleCartoon",  "Height",
                  "HeightCartoon",   "MoveCoarse",    "InterShotCutType"};
    p.train_only_tasks = {"VisualWeightPlacement", "ScaleFinegrained",
                          "StagingScaleMix",       "AngleFinegrained",
                          "MoveCompoundA",         "MoveCaptioning",
                          "VQAPresence",           "VQAMixedType",
                          "SourceCondition",       "Attribute"};
    p.validate();
    return p;
  }();
  return plan;
}

SplitPlan parse_split_plan(const Json& doc, const std::string& ctx) {
  SplitPlan plan;
  plan.ood_tasks = require_string_array(doc, "ood_tasks", ctx);
  plan.id_tasks = require_string_array(doc, "id_tasks", ctx);
  plan.train_only_tasks = require_string_array(doc, "train_only_tasks", ctx);
  if (doc.contains("id_ratio")) plan.id_ratio = require_number(doc, "id_ratio", ctx);
  if (doc.contains("val_per_task"))
    plan.val_per_task =
        static_cast<int>(require_number(doc, "val_per_task", ctx));
  if (doc.contains("seed"))
    plan.seed = static_cast<std::uint64_t>(require_number(doc, "seed", ctx));
  try {
    plan.validate();
  } catch (const Error& e) {
    fail_parse(ctx + ": " + e.what());
  }
  return plan;
}

Json split_plan_to_json(const SplitPlan& plan) {
  return Json{{"ood_tasks", plan.ood_tasks},
              {"id_tasks", plan.id_tasks},
              {"train_only_tasks", plan.train_only_tasks},
              {"id_ratio", plan.id_ratio},
              {"val_per_task", plan.val_per_task},
              {"seed", plan.seed}};
}

std::pair<std::vector<QARecord>, SplitReport> build_splits(
    std::vector<QARecord> records, const SplitPlan& plan) {
  plan.validate();
  const std::set<std::string> ood(plan.ood_tasks.begin(), plan.ood_tasks.end());
  const std::set<std::string> id(plan.id_tasks.begin(), plan.id_tasks.end());
  const std::set<std::string> train_only(plan.train_only_tasks.begin(),
                                         plan.train_only_tasks.end());

  std::map<std::string, std::vector<std::size_t>> by_task;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& task = records[i].task_variant_id;
    if (!ood.contains(task) && !id.contains(task) && !train_only.contains(task))
      fail_invalid("build_splits: task '" + task + "' not covered by the plan");
    by_task[task].push_back(i);
  }

  CounterRng master(plan.seed, CounterRng::stream_of("qa.split"));
  for (auto& [task, indices] : by_task) {
    if (ood.contains(task)) {
      for (std::size_t i : indices) records[i].split = Split::OodTest;
      continue;
    }
    // Per-task shuffle keyed by the task id, independent of sibling tasks.
    CounterRng rng = master.fork(CounterRng::stream_of(task));
    for (std::size_t k = indices.size(); k > 1; --k)
      std::swap(indices[k - 1], indices[rng.next_index(k)]);

    const std::size_t n = indices.size();
    std::size_t test_count = 0;
    if (id.contains(task)) {
      if (n < 100)
        fail_invalid("build_splits: task '" + task + "' has " +
                     std::to_string(n) +
                     " records; at least 100 required for an in-domain split");
      test_count = static_cast<std::size_t>(
          std::floor((1.0 - plan.id_ratio) * static_cast<double>(n) + 0.5));
    } else if (n <= static_cast<std::size_t>(plan.val_per_task)) {
      fail_invalid("build_splits: task '" + task + "' has " +
                   std::to_string(n) +
                   " records; too small to carve the validation holdout");
    }
    const std::size_t val_count = static_cast<std::size_t>(plan.val_per_task);
    for (std::size_t k = 0; k < n; ++k) {
      Split split = Split::Train;
      if (k < test_count)
        split = Split::IdTest;
      else if (k < test_count + val_count)
        split = Split::Val;
      records[indices[k]].split = split;
    }
  }

  // Leakage pass: any test-side record whose media also appears on the
  // train/val side is dropped and logged.
  std::unordered_map<std::string, std::string> train_hashes;
  for (const auto& r : records)
    if (r.split == Split::Train || r.split == Split::Val)
      train_hashes.try_emplace(r.media_hash, r.id);

  SplitReport report;
  std::vector<QARecord> out;
  out.reserve(records.size());
  for (auto& r : records) {
    if (r.split == Split::IdTest || r.split == Split::OodTest) {
      auto it = train_hashes.find(r.media_hash);
      if (it != train_hashes.end()) {
        report.leakage_dropped.push_back({r.id, r.media_hash, it->second});
        continue;
      }
    }
    report.per_task_counts[r.task_variant_id][to_string(r.split)] += 1;
    out.push_back(std::move(r));
  }
  return {std::move(out), report};
}

AuditReport audit(const std::vector<QARecord>& records, const SplitPlan* plan) {
  AuditReport report;
  report.records = records.size();

  std::unordered_map<std::string, std::string> train_hashes;
  for (const auto& r : records)
    if (r.split == Split::Train || r.split == Split::Val)
      train_hashes.try_emplace(r.media_hash, r.id);

  std::map<std::string, std::map<Split, std::size_t>> per_task;
  std::set<std::string> ids;
  for (const auto& r : records) {
    if (!ids.insert(r.id).second)
      report.violations.push_back("duplicate record id: " + r.id);
    if (r.split == Split::Unassigned)
      report.violations.push_back("record without a split: " + r.id);
    per_task[r.task_variant_id][r.split] += 1;
    if ((r.split == Split::IdTest || r.split == Split::OodTest) &&
        train_hashes.contains(r.media_hash))
      report.violations.push_back("train/test media overlap: " + r.id +
                                  " shares hash with " +
                                  train_hashes.at(r.media_hash));
    if (!r.is_caption) {
      for (const auto& a : r.answer)
        if (std::find(r.options.begin(), r.options.end(), a) ==
            r.options.end())
          report.violations.push_back("answer outside options: " + r.id);
    }
  }

  // Split purity per task: a task never mixes held-out and training splits.
  for (const auto& [task, counts] : per_task) {
    const bool has_ood = counts.contains(Split::OodTest);
    const bool has_training_side = counts.contains(Split::Train) ||
                                   counts.contains(Split::Val) ||
                                   counts.contains(Split::IdTest);
    if (has_ood && has_training_side)
      report.violations.push_back("task '" + task +
                                  "' mixes ood_test with training splits");
  }

  if (plan) {
    plan->validate();
    for (const auto& [task, counts] : per_task) {
      const bool is_ood = std::find(plan->ood_tasks.begin(),
                                    plan->ood_tasks.end(),
                                    task) != plan->ood_tasks.end();
      if (is_ood) {
        for (const auto& [split, count] : counts)
          if (split != Split::OodTest)
            report.violations.push_back("task '" + task + "' has " +
                                        to_string(split) +
                                        " records but is held out");
        continue;
      }
      auto it = counts.find(Split::Val);
      const std::size_t val = it == counts.end() ? 0 : it->second;
      if (val != static_cast<std::size_t>(plan->val_per_task))
        report.violations.push_back(
            "task '" + task + "' has " + std::to_string(val) +
            " validation records, expected " +
            std::to_string(plan->val_per_task));
    }
  }
  return report;
}

RawRecord raw_record_from_json(const Json& j, const std::string& ctx) {
  RawRecord r;
  r.media_id = require_string(j, "media_id", ctx);
  r.media_hash = require_string(j, "media_hash", ctx);
  r.modality = modality_from_string(require_string(j, "modality", ctx), ctx);
  r.source_id = require_string(j, "source_id", ctx);
  r.task_variant_id = require_string(j, "task", ctx);
  r.dimension = require_string(j, "dimension", ctx);
  r.kind = kind_from_string(require_string(j, "kind", ctx), ctx);
  if (r.kind == AnnotationKind::Caption) {
    r.caption_template_id = require_string(j, "caption_template", ctx);
  } else {
    r.question = require_string(j, "question", ctx);
    r.options = require_string_array(j, "options", ctx);
  }
  r.answers = require_string_array(j, "answers", ctx);
  try {
    r.validate();
  } catch (const Error& e) {
    fail_parse(ctx + ": " + e.what());
  }
  return r;
}

Json raw_record_to_json(const RawRecord& r) {
  Json j{{"media_id", r.media_id},
         {"media_hash", r.media_hash},
         {"modality", to_string(r.modality)},
         {"source_id", r.source_id},
         {"task", r.task_variant_id},
         {"dimension", r.dimension},
         {"kind", to_string(r.kind)},
         {"answers", r.answers}};
  if (r.kind == AnnotationKind::Caption) {
    j["caption_template"] = r.caption_template_id;
  } else {
    j["question"] = r.question;
    j["options"] = r.options;
  }
  return j;
}

QARecord qa_record_from_json(const Json& j, const std::string& ctx) {
  QARecord r;
  r.id = require_string(j, "id", ctx);
  r.media_id = require_string(j, "media_id", ctx);
  r.media_hash = require_string(j, "media_hash", ctx);
  r.modality = modality_from_string(require_string(j, "modality", ctx), ctx);
  r.source_id = require_string(j, "source_id", ctx);
  r.task_variant_id = require_string(j, "task", ctx);
  r.dimension = require_string(j, "dimension", ctx);
  const Json& caption = require_field(j, "caption", ctx);
  if (!caption.is_boolean()) fail_parse(ctx + ": 'caption' must be a boolean");
  r.is_caption = caption.get<bool>();
  r.question_text = require_string(j, "question_text", ctx);
  if (!r.is_caption) r.options = require_string_array(j, "options", ctx);
  r.answer = require_string_array(j, "answer", ctx);
  if (j.contains("split"))
    r.split = split_from_string(require_string(j, "split", ctx), ctx);
  return r;
}

Json qa_record_to_json(const QARecord& r) {
  Json j{{"id", r.id},
         {"media_id", r.media_id},
         {"media_hash", r.media_hash},
         {"modality", to_string(r.modality)},
         {"source_id", r.source_id},
         {"task", r.task_variant_id},
         {"dimension", r.dimension},
         {"caption", r.is_caption},
         {"question_text", r.question_text},
         {"answer", r.answer}};
  if (!r.is_caption) j["options"] = r.options;
  if (r.split != Split::Unassigned) j["split"] = to_string(r.split);
  return j;
}

std::vector<RawRecord> read_raw_manifest(const std::string& path) {
  std::vector<RawRecord> records;
  std::size_t line = 0;
  for (const auto& j : read_jsonl(path))
    records.push_back(
        raw_record_from_json(j, path + ":" + std::to_string(++line)));
  return records;
}

std::vector<QARecord> read_qa_records(const std::string& path) {
  std::vector<QARecord> records;
  std::size_t line = 0;
  for (const auto& j : read_jsonl(path))
    records.push_back(
        qa_record_from_json(j, path + ":" + std::to_string(++line)));
  return records;
}

void write_qa_records(const std::string& path,
                      const std::vector<QARecord>& records) {
  std::vector<Json> docs;
  docs.reserve(records.size());
  for (const auto& r : records) docs.push_back(qa_record_to_json(r));
  write_jsonl(path, docs);
}

}  // namespace shotmix
