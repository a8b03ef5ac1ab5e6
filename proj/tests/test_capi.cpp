#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>

#include <json.hpp>

#include "shotmix.h"

namespace {

struct OwnedString {
  char* value = nullptr;
  ~OwnedString() { shotmix_string_free(value); }
  std::string str() const { return value ? value : ""; }
};

struct LedgerHandle {
  shotmix_ledger* handle = nullptr;
  ~LedgerHandle() { shotmix_ledger_free(handle); }
};

const char* kLedgerJson = R"({
  "dims": ["a", "b", "c"],
  "A": [[0.8, 0.55, 0.6], [0.45, 0.8, 0.5], [0.5, 0.55, 0.7]],
  "base": [0.4, 0.5, 0.45],
  "anchors": [0.8, 0.8, 0.7],
  "eps": 1e-8
})";

std::filesystem::path temp_file(const std::string& name) {
  return std::filesystem::temp_directory_path() / name;
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
}

using Json = nlohmann::json;

}  // namespace

TEST_CASE("version and error state") {
  CHECK(std::strcmp(shotmix_version(), "0.1.0") == 0);
  CHECK(std::string(shotmix_last_error()).empty());
}

TEST_CASE("ledger parse, serialize, prior, summary, csv") {
  LedgerHandle ledger;
  OwnedString warnings;
  REQUIRE(shotmix_ledger_parse(kLedgerJson, &ledger.handle, &warnings.value) ==
          SHOTMIX_OK);
  CHECK(Json::parse(warnings.str()).empty());
  CHECK(shotmix_ledger_dim_count(ledger.handle) == 3);

  OwnedString json;
  REQUIRE(shotmix_ledger_to_json(ledger.handle, &json.value) == SHOTMIX_OK);
  const auto round_trip = Json::parse(json.str());
  CHECK(round_trip["dims"] == Json({"a", "b", "c"}));

  OwnedString prior;
  REQUIRE(shotmix_ledger_prior_json(ledger.handle, &prior.value) == SHOTMIX_OK);
  const auto prior_doc = Json::parse(prior.str());
  CHECK(prior_doc["Ttilde"].size() == 3);

  OwnedString summary;
  REQUIRE(shotmix_ledger_summary_json(ledger.handle, &summary.value) ==
          SHOTMIX_OK);
  CHECK(Json::parse(summary.str())["per_dim"].size() == 3);

  OwnedString csv;
  REQUIRE(shotmix_ledger_matrix_csv(ledger.handle, &csv.value) == SHOTMIX_OK);
  CHECK(csv.str().rfind("source\\target,a,b,c\n", 0) == 0);
}

TEST_CASE("ledger parse failures set last_error and status") {
  shotmix_ledger* handle = nullptr;
  CHECK(shotmix_ledger_parse("{ not json", &handle, nullptr) ==
        SHOTMIX_ERR_PARSE);
  CHECK(!std::string(shotmix_last_error()).empty());
  CHECK(handle == nullptr);

  CHECK(shotmix_ledger_load("/nonexistent/ledger.json", &handle, nullptr) ==
        SHOTMIX_ERR_IO);
}

TEST_CASE("ledger save/load round trip through files") {
  LedgerHandle ledger;
  REQUIRE(shotmix_ledger_parse(kLedgerJson, &ledger.handle, nullptr) ==
          SHOTMIX_OK);
  const auto path = temp_file("capi_ledger.json");
  REQUIRE(shotmix_ledger_save(ledger.handle, path.string().c_str()) ==
          SHOTMIX_OK);
  LedgerHandle back;
  OwnedString warnings;
  REQUIRE(shotmix_ledger_load(path.string().c_str(), &back.handle,
                              &warnings.value) == SHOTMIX_OK);
  CHECK(shotmix_ledger_dim_count(back.handle) == 3);
  std::filesystem::remove(path);
}

TEST_CASE("mix state lifecycle: init, update, probs, trace") {
  LedgerHandle ledger;
  REQUIRE(shotmix_ledger_parse(kLedgerJson, &ledger.handle, nullptr) ==
          SHOTMIX_OK);
  const char* dims[] = {"a", "b", "c"};
  shotmix_mix_params params;
  shotmix_mix_params_init(&params);
  CHECK(params.steps_per_round == 200);

  shotmix_mix_state* state = nullptr;
  REQUIRE(shotmix_mix_state_init(dims, 3, &params, &state) == SHOTMIX_OK);
  CHECK(shotmix_mix_state_round(state) == 0);

  double probs[3];
  REQUIRE(shotmix_mix_state_probs(state, probs, 3) == SHOTMIX_OK);
  CHECK(probs[0] == doctest::Approx(1.0 / 3));

  const double scores[] = {0.5, 0.8, 0.45};
  REQUIRE(shotmix_mix_state_update(state, ledger.handle, scores, 3) ==
          SHOTMIX_OK);
  CHECK(shotmix_mix_state_round(state) == 1);
  REQUIRE(shotmix_mix_state_probs(state, probs, 3) == SHOTMIX_OK);
  double sum = probs[0] + probs[1] + probs[2];
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));

  OwnedString trace;
  REQUIRE(shotmix_mix_state_trace_jsonl(state, &trace.value) == SHOTMIX_OK);
  const auto line = Json::parse(trace.str().substr(0, trace.str().find('\n')));
  CHECK(line["round"] == 0);
  CHECK(line["V"].size() == 3);

  // Mismatched score length is a validation error, not a crash.
  CHECK(shotmix_mix_state_update(state, ledger.handle, scores, 2) ==
        SHOTMIX_ERR_INVALID_ARGUMENT);
  shotmix_mix_state_free(state);
}

TEST_CASE("mix run without a ledger probes a synthetic suite") {
  OwnedString trace, result;
  REQUIRE(shotmix_mix_run(nullptr,
                          R"({"rounds": 4, "K": 40, "seed": 3,
                              "dims": ["x", "y", "z"], "probe_steps": 120})",
                          &trace.value, &result.value) == SHOTMIX_OK);
  const auto doc = Json::parse(result.str());
  CHECK(doc["ledger_probed"] == true);
  CHECK(doc["state"]["round"] == 4);
  CHECK(doc["ledger"]["dims"] == Json({"x", "y", "z"}));
  const std::string trace_text = trace.str();
  CHECK(std::count(trace_text.begin(), trace_text.end(), '\n') == 4);
}

TEST_CASE("mix plan for one target and for all targets") {
  LedgerHandle ledger;
  REQUIRE(shotmix_ledger_parse(kLedgerJson, &ledger.handle, nullptr) ==
          SHOTMIX_OK);
  OwnedString one;
  REQUIRE(shotmix_mix_plan(ledger.handle, "a", 0.7, &one.value) == SHOTMIX_OK);
  const auto plan = Json::parse(one.str());
  CHECK(plan["target"] == "a");
  CHECK(plan["alpha"] == 0.7);
  CHECK(plan["p"]["a"] == 0.7);

  OwnedString all;
  REQUIRE(shotmix_mix_plan(ledger.handle, nullptr, 0.7, &all.value) ==
          SHOTMIX_OK);
  CHECK(Json::parse(all.str()).size() == 3);

  OwnedString csv;
  REQUIRE(shotmix_mix_plan_csv(ledger.handle, 0.7, &csv.value) == SHOTMIX_OK);
  CHECK(csv.str().rfind("target,alpha,a,b,c\n", 0) == 0);

  CHECK(shotmix_mix_plan(ledger.handle, "ghost", 0.7, &one.value) ==
        SHOTMIX_ERR_INVALID_ARGUMENT);
}

TEST_CASE("route against builtin cards and unroutable queries") {
  OwnedString out;
  REQUIRE(shotmix_route("What type of cut is used in this video example?",
                        nullptr, &out.value) == SHOTMIX_OK);
  auto doc = Json::parse(out.str());
  CHECK(doc["dimension"] == "cuts");
  CHECK(doc["unroutable"] == false);

  OwnedString out2;
  REQUIRE(shotmix_route("weather tomorrow", nullptr, &out2.value) == SHOTMIX_OK);
  CHECK(Json::parse(out2.str())["unroutable"] == true);

  OwnedString cards;
  REQUIRE(shotmix_expert_cards(&cards.value) == SHOTMIX_OK);
  CHECK(Json::parse(cards.str()).size() == 6);
}

TEST_CASE("pipeline: ingest, split, audit, score through files") {
  const auto manifest = temp_file("capi_manifest.jsonl");
  std::string lines;
  auto add_task = [&](const std::string& task, int count,
                      const std::string& dim) {
    for (int i = 0; i < count; ++i) {
      Json j{{"media_id", task + "-m" + std::to_string(i)},
             {"media_hash", task + "-h" + std::to_string(i)},
             {"modality", "image"},
             {"source_id", "src0"},
             {"task", task},
             {"dimension", dim},
             {"kind", "single_label"},
             {"question", "Which label applies?"},
             {"options", {"Left", "Right"}},
             {"answers", {i % 2 == 0 ? "Left" : "Right"}}};
      lines += j.dump() + "\n";
    }
  };
  add_task("BigTask", 150, "coverage");
  add_task("TinyTask", 40, "motion");
  add_task("HeldOut", 30, "cuts");
  write_file(manifest, lines);

  const auto plan_path = temp_file("capi_plan.json");
  write_file(plan_path, Json{{"ood_tasks", {"HeldOut"}},
                             {"id_tasks", {"BigTask"}},
                             {"train_only_tasks", {"TinyTask"}}}
                            .dump());

  const auto qa_path = temp_file("capi_qa.jsonl");
  OwnedString ingest_report;
  REQUIRE(shotmix_ingest(manifest.string().c_str(), qa_path.string().c_str(),
                         &ingest_report.value) == SHOTMIX_OK);
  CHECK(Json::parse(ingest_report.str())["unified"] == 220);

  const auto split_path = temp_file("capi_split.jsonl");
  OwnedString split_report;
  REQUIRE(shotmix_split(qa_path.string().c_str(), plan_path.string().c_str(),
                        11, split_path.string().c_str(),
                        &split_report.value) == SHOTMIX_OK);
  const auto split_doc = Json::parse(split_report.str());
  CHECK(split_doc["per_task_counts"]["BigTask"]["id_test"] == 30);
  CHECK(split_doc["per_task_counts"]["BigTask"]["val"] == 20);

  OwnedString audit_report;
  REQUIRE(shotmix_audit(split_path.string().c_str(),
                        plan_path.string().c_str(),
                        &audit_report.value) == SHOTMIX_OK);
  CHECK(Json::parse(audit_report.str())["clean"] == true);

  // Perfect predictions over the split file.
  std::string preds;
  {
    std::ifstream in(split_path);
    std::string line;
    while (std::getline(in, line)) {
      const auto record = Json::parse(line);
      const std::string text = record["answer"][0].get<std::string>();
      preds += Json{{"qa_id", record["id"]}, {"raw_text", text}}.dump() + "\n";
    }
  }
  const auto pred_path = temp_file("capi_preds.jsonl");
  write_file(pred_path, preds);
  OwnedString score_report;
  REQUIRE(shotmix_eval_score(split_path.string().c_str(),
                             pred_path.string().c_str(),
                             &score_report.value) == SHOTMIX_OK);
  const auto score_doc = Json::parse(score_report.str());
  CHECK(score_doc["avg_acc"] == 1.0);
  CHECK(score_doc["parse_failures"] == 0);

  OwnedString compare_report;
  const std::string pred_str = pred_path.string();
  const std::string split_str = split_path.string();
  const char* paths[] = {pred_str.c_str(), pred_str.c_str()};
  const char* names[] = {"m1", "m2"};
  REQUIRE(shotmix_eval_compare(split_str.c_str(), paths, names, 2, "m1",
                               &compare_report.value) == SHOTMIX_OK);
  const auto compare_doc = Json::parse(compare_report.str());
  CHECK(compare_doc["count_first"]["m1"] == 3);
  CHECK(compare_doc["normalized"]["m2"]["average"] == 1.0);

  for (const auto& p : {manifest, plan_path, qa_path, split_path, pred_path})
    std::filesystem::remove(p);
}

TEST_CASE("theory check and concentration CSV") {
  OwnedString report;
  REQUIRE(shotmix_theory_check("dilution", 5,
                               R"({"fuzz_pools": 50})", &report.value) ==
          SHOTMIX_OK);
  const auto doc = Json::parse(report.str());
  CHECK(doc["pass"] == true);
  CHECK(doc["suites"]["dilution"]["pools"] == 50);

  CHECK(shotmix_theory_check("bogus", 5, nullptr, &report.value) ==
        SHOTMIX_ERR_INVALID_ARGUMENT);

  OwnedString csv;
  REQUIRE(shotmix_theory_concentration_csv(
              5, R"({"sizes": [10, 40], "replications": 8,
                     "oracle_draws": 2000})",
              &csv.value) == SHOTMIX_OK);
  CHECK(csv.str().rfind("size,bound,coverage", 0) == 0);
}

TEST_CASE("ablate through the C surface") {
  OwnedString report, text;
  REQUIRE(shotmix_ablate(
              R"({"variants": ["unishot_naive", "target_only"],
                  "seeds": 2, "n_dims": 3, "total_steps": 150,
                  "probe_steps": 80})",
              &report.value, &text.value) == SHOTMIX_OK);
  const auto doc = Json::parse(report.str());
  CHECK(doc["variants"].size() == 2);
  CHECK(text.str().find("unishot_naive") != std::string::npos);

  CHECK(shotmix_ablate(R"({"variants": ["nope"]})", &report.value, nullptr) ==
        SHOTMIX_ERR_INVALID_ARGUMENT);
  CHECK(shotmix_ablate("{}", &report.value, nullptr) == SHOTMIX_ERR_PARSE);
}
