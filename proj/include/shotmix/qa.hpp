#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "shotmix/json_util.hpp"
#include "shotmix/transfer.hpp"

namespace shotmix {

enum class Modality { Image, Video };
enum class AnnotationKind { SingleLabel, LabelSet, Binary, Caption };
enum class Split { Unassigned, Train, Val, IdTest, OodTest };

std::string to_string(Modality m);
std::string to_string(AnnotationKind k);
std::string to_string(Split s);

/// One heterogeneous source annotation before unification.
struct RawRecord {
  std::string media_id;
  std::string media_hash;
  Modality modality = Modality::Image;
  std::string source_id;
  std::string task_variant_id;
  DimensionId dimension;
  AnnotationKind kind = AnnotationKind::SingleLabel;
  std::string question;               // classification/binary
  std::vector<std::string> options;   // classification/binary
  std::vector<std::string> answers;   // labels, or the caption text
  std::string caption_template_id;    // caption records

  void validate() const;
};

/// One unified QA pair with a byte-exact rendered prompt.
struct QARecord {
  std::string id;
  std::string media_id;
  std::string media_hash;
  Modality modality = Modality::Image;
  std::string source_id;
  std::string task_variant_id;
  DimensionId dimension;
  bool is_caption = false;
  std::string question_text;
  std::vector<std::string> options;  // empty for caption records
  std::vector<std::string> answer;   // label texts in option-letter order
  Split split = Split::Unassigned;
};

/// Open-ended caption prompts; the defaults are the two camera-motion forms.
const std::map<std::string, std::string>& caption_templates();

/// Byte-exact unified prompt: visual placeholder first, then the expert
/// preamble, the question, lettered options, and the two answer-format
/// instruction lines. LF separators, no trailing newline. Caption records
/// render without the option block.
std::string render_prompt(const RawRecord& record);

/// "X. Text" for one label; multiple labels joined with " && " in ascending
/// option-letter order.
std::string format_answer(const std::vector<std::string>& labels,
                          const std::vector<std::string>& options);

struct DedupReport {
  std::size_t kept = 0;
  std::size_t dropped = 0;
  std::map<std::string, std::size_t> dropped_per_source;
};

/// One record per media hash; the keeper is the lexicographically smallest
/// (source_id, media_id, task_variant_id). Input order independent.
std::pair<std::vector<RawRecord>, DedupReport> dedup(
    std::vector<RawRecord> records);

struct IngestReport {
  std::size_t input = 0;
  std::size_t unified = 0;
  std::size_t captions = 0;
  std::size_t filtered = 0;  // rejected by the content filter
  DedupReport dedup;
};

/// Content-filter hook (the shipped default keeps everything); records it
/// rejects are dropped before dedup and counted in the report.
using ContentFilter = std::function<bool(const RawRecord&)>;
const ContentFilter& pass_all_filter();

/// Validate, filter, dedup, render, and unify a raw manifest.
std::pair<std::vector<QARecord>, IngestReport> ingest(
    std::vector<RawRecord> records,
    const ContentFilter& filter = pass_all_filter());

struct SplitPlan {
  std::vector<std::string> ood_tasks;
  std::vector<std::string> id_tasks;
  std::vector<std::string> train_only_tasks;
  double id_ratio = 0.8;
  int val_per_task = 20;
  std::uint64_t seed = 0;

  void validate() const;  // pairwise-disjoint task lists, sane ratios
};

/// Task lists of the shipped suite: 11 held-out tasks, 12 large tasks with
/// an in-domain test split, 10 training-only tasks.
const SplitPlan& default_split_plan();

SplitPlan parse_split_plan(const Json& doc, const std::string& ctx);
Json split_plan_to_json(const SplitPlan& plan);

struct LeakageDrop {
  std::string record_id;
  std::string media_hash;
  std::string conflicting_record_id;
};

struct SplitReport {
  std::map<std::string, std::map<std::string, std::size_t>> per_task_counts;
  std::vector<LeakageDrop> leakage_dropped;
};

/// Assigns splits: held-out tasks go entirely to the OOD test side; large
/// tasks split id_ratio/test per task under the plan seed, then val_per_task
/// validation records are carved from the train side; training-only tasks
/// keep everything minus the validation carve. A final pass drops any test
/// record whose media hash also appears on the train/val side.
std::pair<std::vector<QARecord>, SplitReport> build_splits(
    std::vector<QARecord> records, const SplitPlan& plan);

struct AuditReport {
  std::vector<std::string> violations;
  std::size_t records = 0;
  bool clean() const { return violations.empty(); }
};

/// Read-only consistency audit: no train/test media overlap, exactly one
/// split per record, answers within options, per-task split purity (plus
/// validation-size checks when a plan is supplied).
AuditReport audit(const std::vector<QARecord>& records,
                  const SplitPlan* plan = nullptr);

RawRecord raw_record_from_json(const Json& j, const std::string& ctx);
Json raw_record_to_json(const RawRecord& r);
QARecord qa_record_from_json(const Json& j, const std::string& ctx);
Json qa_record_to_json(const QARecord& r);

std::vector<RawRecord> read_raw_manifest(const std::string& path);
std::vector<QARecord> read_qa_records(const std::string& path);
void write_qa_records(const std::string& path,
                      const std::vector<QARecord>& records);

}  // namespace shotmix
