// shotmix CLI: argument parsing, file plumbing, and run manifests on top of
// the C API. All core functionality goes through shotmix.h.

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "shotmix.h"

namespace {

using Json = nlohmann::json;

struct CString {
  char* value = nullptr;
  ~CString() { shotmix_string_free(value); }
  std::string str() const { return value ? value : ""; }
};

int exit_code_of(shotmix_status status) {
  if (status == SHOTMIX_OK) return 0;
  if (status == SHOTMIX_ERR_INTERNAL) return 2;
  return 1;
}

int fail(shotmix_status status) {
  std::cerr << "shotmix: error: " << shotmix_last_error() << "\n";
  return exit_code_of(status);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    std::cerr << "shotmix: error: cannot open " << path << "\n";
    std::exit(1);
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

bool write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    std::cerr << "shotmix: error: cannot write " << path << "\n";
    return false;
  }
  out << content;
  return out.good();
}

std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[32];
  std::snprintf(buf, sizeof(buf), "fnv1a64:%016llx",
                static_cast<unsigned long long>(h));
  return buf;
}

struct RunContext {
  std::vector<std::string> argv;
  std::string subcommand;
  std::uint64_t seed = 0;
  std::string manifest_path;               // empty: derive from first output
  std::vector<std::string> inputs;         // hashed into the manifest
  std::vector<std::string> outputs;        // written by this run
  Json config = Json::object();            // full flag snapshot

  // Reproducibility record: inputs by content hash, the exact argv, and the
  // config snapshot. Re-running the argv reproduces the outputs byte for
  // byte. Only emitted when the run wrote at least one file.
  void write_manifest() const {
    if (outputs.empty()) return;
    Json doc;
    doc["tool_version"] = shotmix_version();
    doc["subcommand"] = subcommand;
    doc["argv"] = argv;
    doc["seed"] = seed;
    doc["config"] = config;
    Json input_hashes = Json::object();
    for (const auto& path : inputs) input_hashes[path] = fnv1a_hex(read_file(path));
    doc["inputs"] = input_hashes;
    doc["outputs"] = outputs;
    const std::string path =
        manifest_path.empty() ? outputs.front() + ".manifest.json" : manifest_path;
    write_file(path, doc.dump(2) + "\n");
  }
};

/// Emits the payload to --out (with a manifest) or stdout.
int deliver(RunContext& ctx, const std::string& out_path,
            const std::string& payload) {
  if (out_path.empty()) {
    std::cout << payload;
    if (!payload.empty() && payload.back() != '\n') std::cout << '\n';
    return 0;
  }
  if (!write_file(out_path, payload)) return 1;
  ctx.outputs.push_back(out_path);
  ctx.write_manifest();
  return 0;
}

bool format_in(const std::string& format,
               std::initializer_list<const char*> allowed) {
  for (const char* a : allowed)
    if (format == a) return true;
  std::cerr << "shotmix: error: unsupported --format '" << format
            << "' for this subcommand\n";
  return false;
}

struct LedgerHandle {
  shotmix_ledger* handle = nullptr;
  ~LedgerHandle() { shotmix_ledger_free(handle); }
};

int load_ledger_or_fail(const std::string& path, LedgerHandle& ledger) {
  CString warnings;
  const auto status =
      shotmix_ledger_load(path.c_str(), &ledger.handle, &warnings.value);
  if (status != SHOTMIX_OK) return fail(status);
  for (const auto& w : Json::parse(warnings.str()))
    std::cerr << "shotmix: warning: " << w.get<std::string>() << "\n";
  return 0;
}

// ---- text renderers ------------------------------------------------------

std::string ingest_text(const Json& report) {
  std::ostringstream out;
  out << "input records:   " << report["input"] << "\n"
      << "unified records: " << report["unified"] << "\n"
      << "caption records: " << report["captions"] << "\n"
      << "dedup dropped:   " << report["dedup_dropped"] << "\n";
  for (const auto& [source, count] :
       report["dedup_dropped_per_source"].items())
    out << "  dropped from " << source << ": " << count << "\n";
  return out.str();
}

std::string split_text(const Json& report) {
  std::ostringstream out;
  out << "records out:     " << report["records_out"] << "\n"
      << "leakage dropped: " << report["leakage_dropped"].size() << "\n";
  for (const auto& [task, counts] : report["per_task_counts"].items()) {
    out << task << ":";
    for (const auto& [split, count] : counts.items())
      out << " " << split << "=" << count;
    out << "\n";
  }
  return out.str();
}

std::string audit_text(const Json& report) {
  std::ostringstream out;
  if (report["clean"].get<bool>()) {
    out << "clean (" << report["records"] << " records)\n";
  } else {
    out << report["violations"].size() << " violation(s):\n";
    for (const auto& v : report["violations"])
      out << "  " << v.get<std::string>() << "\n";
  }
  return out.str();
}

std::string route_text(const Json& report) {
  std::ostringstream out;
  if (report["unroutable"].get<bool>())
    out << "unroutable\n";
  else
    out << "dimension: " << report["dimension"].get<std::string>() << "\n";
  for (const auto& s : report["scores"]) {
    out << "  " << s["dim"].get<std::string>() << ": " << s["score"];
    if (!s["matched_tokens"].empty()) {
      out << " (";
      bool first = true;
      for (const auto& t : s["matched_tokens"]) {
        if (!first) out << " ";
        first = false;
        out << t.get<std::string>();
      }
      out << ")";
    }
    out << "\n";
  }
  return out.str();
}

std::string theory_text(const Json& report) {
  std::ostringstream out;
  for (const auto& [name, suite] : report["suites"].items())
    out << name << ": " << (suite["pass"].get<bool>() ? "PASS" : "FAIL") << "\n";
  out << "overall: " << (report["pass"].get<bool>() ? "PASS" : "FAIL") << "\n";
  return out.str();
}

std::string score_text(const Json& report) {
  std::ostringstream out;
  out << "avg_acc: " << report["avg_acc"] << "\n";
  for (const auto& [task, acc] : report["per_task_acc"].items())
    out << "  " << task << ": " << acc << "\n";
  out << "parse failures: " << report["parse_failures"]
      << ", missing predictions: " << report["missing_predictions"]
      << ", skipped captions: " << report["skipped_captions"] << "\n";
  return out.str();
}

std::string compare_text(const Json& report) {
  std::ostringstream out;
  out << "count #1:\n";
  for (const auto& [method, count] : report["count_first"].items())
    out << "  " << method << ": " << count << "\n";
  out << "avg acc:\n";
  for (const auto& [method, doc] : report["methods"].items())
    out << "  " << method << ": " << doc["avg_acc"] << "\n";
  if (report.contains("normalized")) {
    out << "normalized (average / worst / 2nd-worst):\n";
    for (const auto& [method, doc] : report["normalized"].items())
      out << "  " << method << ": " << doc["average"] << " / " << doc["worst"]
          << " (" << doc["worst_dim"].get<std::string>() << ") / "
          << doc["second_worst"] << " ("
          << doc["second_worst_dim"].get<std::string>() << ")\n";
  }
  return out.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"shot-language data mixing, annotation theory, and evaluation "
               "toolkit"};
  app.set_version_flag("--version", shotmix_version());
  app.fallthrough();
  app.require_subcommand(0, 1);

  RunContext ctx;
  for (int i = 0; i < argc; ++i) ctx.argv.emplace_back(argv[i]);

  std::string out_path, format = "json", manifest_path;
  int workers = 1;
  std::uint64_t seed = 0;
  app.add_option("--seed", seed, "master seed (default 0)");
  app.add_option("--out", out_path, "output file (default stdout)");
  app.add_option("--format", format, "output format: json|csv|text")
      ->default_str("json");
  app.add_option("--workers", workers, "worker threads for parallel stages");
  app.add_option("--manifest", manifest_path,
                 "run manifest path (default <out>.manifest.json)");

  int rc = 0;
  auto run = [&](const std::string& name, auto&& body) {
    return [&, name, body]() {
      ctx.subcommand = name;
      ctx.seed = seed;
      ctx.manifest_path = manifest_path;
      rc = body();
    };
  };

  // ---- ingest ----
  auto* ingest = app.add_subcommand("ingest", "unify a raw record manifest");
  std::string ingest_manifest, ingest_report_path;
  ingest->add_option("--manifest", ingest_manifest, "raw JSONL manifest")
      ->required();
  ingest->add_option("--report", ingest_report_path, "report file");
  ingest->callback(run("ingest", [&]() -> int {
    if (!format_in(format, {"json", "text"})) return 1;
    if (out_path.empty()) {
      std::cerr << "shotmix: error: ingest requires --out\n";
      return 1;
    }
    CString report;
    const auto status = shotmix_ingest(ingest_manifest.c_str(),
                                       out_path.c_str(), &report.value);
    if (status != SHOTMIX_OK) return fail(status);
    ctx.inputs = {ingest_manifest};
    ctx.outputs = {out_path};
    ctx.config = {{"manifest", ingest_manifest}, {"out", out_path}};
    const Json doc = Json::parse(report.str());
    if (!ingest_report_path.empty()) {
      if (!write_file(ingest_report_path, doc.dump(2) + "\n")) return 1;
      ctx.outputs.push_back(ingest_report_path);
    }
    ctx.write_manifest();
    std::cout << (format == "text" ? ingest_text(doc) : doc.dump(2) + "\n");
    return 0;
  }));

  // ---- split ----
  auto* split = app.add_subcommand("split", "assign train/val/test splits");
  std::string split_in, split_plan, split_report_path;
  split->add_option("--in", split_in, "unified QA JSONL")->required();
  split->add_option("--plan", split_plan, "split plan JSON (default built-in)");
  split->add_option("--report", split_report_path, "report file");
  split->callback(run("split", [&]() -> int {
    if (!format_in(format, {"json", "text"})) return 1;
    if (out_path.empty()) {
      std::cerr << "shotmix: error: split requires --out\n";
      return 1;
    }
    CString report;
    const auto status = shotmix_split(
        split_in.c_str(), split_plan.empty() ? nullptr : split_plan.c_str(),
        seed, out_path.c_str(), &report.value);
    if (status != SHOTMIX_OK) return fail(status);
    ctx.inputs = {split_in};
    if (!split_plan.empty()) ctx.inputs.push_back(split_plan);
    ctx.outputs = {out_path};
    ctx.config = {{"in", split_in},
                  {"plan", split_plan.empty() ? "<builtin>" : split_plan},
                  {"seed", seed},
                  {"out", out_path}};
    const Json doc = Json::parse(report.str());
    if (!split_report_path.empty()) {
      if (!write_file(split_report_path, doc.dump(2) + "\n")) return 1;
      ctx.outputs.push_back(split_report_path);
    }
    ctx.write_manifest();
    std::cout << (format == "text" ? split_text(doc) : doc.dump(2) + "\n");
    return 0;
  }));

  // ---- audit ----
  auto* audit_cmd = app.add_subcommand("audit", "consistency-audit a QA file");
  std::string audit_in, audit_plan;
  audit_cmd->add_option("--in", audit_in, "split QA JSONL")->required();
  audit_cmd->add_option("--plan", audit_plan, "split plan for count checks");
  audit_cmd->callback(run("audit", [&]() -> int {
    if (!format_in(format, {"json", "text"})) return 1;
    CString report;
    const auto status = shotmix_audit(
        audit_in.c_str(), audit_plan.empty() ? nullptr : audit_plan.c_str(),
        &report.value);
    if (status != SHOTMIX_OK) return fail(status);
    ctx.inputs = {audit_in};
    if (!audit_plan.empty()) ctx.inputs.push_back(audit_plan);
    ctx.config = {{"in", audit_in},
                  {"plan", audit_plan.empty() ? "<none>" : audit_plan}};
    const Json doc = Json::parse(report.str());
    const std::string payload =
        format == "text" ? audit_text(doc) : doc.dump(2) + "\n";
    const int delivered = deliver(ctx, out_path, payload);
    if (delivered != 0) return delivered;
    return doc["clean"].get<bool>() ? 0 : 1;
  }));

  // ---- mix ----
  auto* mix = app.add_subcommand("mix", "data mixing plans and schedules");
  mix->require_subcommand(1);

  auto* mix_plan = mix->add_subcommand("plan", "target-aware static mixtures");
  std::string plan_ledger, plan_target;
  double plan_alpha = 0.7;
  mix_plan->add_option("--ledger", plan_ledger, "transfer ledger JSON")
      ->required();
  mix_plan->add_option("--target", plan_target, "one target dimension");
  mix_plan->add_option("--alpha", plan_alpha, "target mass (default 0.7)");
  mix_plan->callback(run("mix plan", [&]() -> int {
    if (!format_in(format, {"json", "csv", "text"})) return 1;
    LedgerHandle ledger;
    if (int code = load_ledger_or_fail(plan_ledger, ledger)) return code;
    ctx.inputs = {plan_ledger};
    ctx.config = {{"ledger", plan_ledger},
                  {"target", plan_target.empty() ? "<all>" : plan_target},
                  {"alpha", plan_alpha},
                  {"format", format}};
    std::string payload;
    if (format == "csv") {
      // CSV view: the mix-plan matrix over dimensions.
      CString csv;
      const auto status =
          shotmix_mix_plan_csv(ledger.handle, plan_alpha, &csv.value);
      if (status != SHOTMIX_OK) return fail(status);
      payload = csv.str();
    } else {
      CString plan;
      const auto status = shotmix_mix_plan(
          ledger.handle, plan_target.empty() ? nullptr : plan_target.c_str(),
          plan_alpha, &plan.value);
      if (status != SHOTMIX_OK) return fail(status);
      payload = Json::parse(plan.str()).dump(2) + "\n";
    }
    return deliver(ctx, out_path, payload);
  }));

  auto* mix_run = mix->add_subcommand("run", "dynamic-balanced schedule on "
                                             "the synthetic trainer");
  std::string run_ledger, run_dims, run_result_path;
  int run_rounds = 30, run_k = 200, run_probe = 400, run_batch = 32;
  double run_lambda = 0.5, run_beta = 0.3, run_eps = 1e-8, run_lr = 0.1;
  mix_run->add_option("--ledger", run_ledger,
                      "transfer ledger (omit to probe a synthetic one)");
  mix_run->add_option("--rounds", run_rounds, "reweighting rounds");
  mix_run->add_option("--K", run_k, "trainer steps per round");
  mix_run->add_option("--lambda", run_lambda, "exploration weight");
  mix_run->add_option("--beta", run_beta, "update smoothness");
  mix_run->add_option("--eps", run_eps, "regularizer");
  mix_run->add_option("--dims", run_dims,
                      "comma-separated dimension names (no-ledger runs)");
  mix_run->add_option("--probe-steps", run_probe, "ledger probe steps");
  mix_run->add_option("--batch-size", run_batch, "trainer batch size");
  mix_run->add_option("--learning-rate", run_lr, "trainer learning rate");
  mix_run->add_option("--result", run_result_path, "schedule result JSON path");
  mix_run->callback(run("mix run", [&]() -> int {
    if (!format_in(format, {"json", "text"})) return 1;
    Json config{{"rounds", run_rounds}, {"K", run_k},
                {"lambda", run_lambda}, {"beta", run_beta},
                {"eps", run_eps},       {"seed", seed},
                {"probe_steps", run_probe}, {"batch_size", run_batch},
                {"learning_rate", run_lr}};
    if (!run_dims.empty()) {
      Json dims = Json::array();
      std::stringstream ss(run_dims);
      std::string dim;
      while (std::getline(ss, dim, ',')) dims.push_back(dim);
      config["dims"] = dims;
    }
    LedgerHandle ledger;
    if (!run_ledger.empty()) {
      if (int code = load_ledger_or_fail(run_ledger, ledger)) return code;
      ctx.inputs = {run_ledger};
    }
    CString trace, result;
    const auto status = shotmix_mix_run(ledger.handle, config.dump().c_str(),
                                        &trace.value, &result.value);
    if (status != SHOTMIX_OK) return fail(status);
    ctx.config = config;
    ctx.config["ledger"] = run_ledger.empty() ? "<probed>" : run_ledger;
    const Json doc = Json::parse(result.str());
    if (!run_result_path.empty()) {
      if (!write_file(run_result_path, doc.dump(2) + "\n")) return 1;
      ctx.outputs.push_back(run_result_path);
    }
    // Primary payload: the JSONL trace, one line per round.
    if (!out_path.empty()) {
      if (!write_file(out_path, trace.str())) return 1;
      ctx.outputs.insert(ctx.outputs.begin(), out_path);
      ctx.write_manifest();
      if (format == "text") {
        std::cout << "rounds: " << doc["state"]["round"] << "\nfinal p: ";
        std::cout << doc["state"]["p"].dump() << "\n";
      }
      return 0;
    }
    ctx.write_manifest();
    std::cout << trace.str();
    return 0;
  }));

  // ---- route ----
  auto* route_cmd = app.add_subcommand("route", "pick the expert for a query");
  std::string route_query, route_cards;
  route_cmd->add_option("--query", route_query, "query text")->required();
  route_cmd->add_option("--cards", route_cards,
                        "expert cards JSON (default built-in)");
  route_cmd->callback(run("route", [&]() -> int {
    if (!format_in(format, {"json", "text"})) return 1;
    std::string cards_json;
    if (!route_cards.empty()) {
      cards_json = read_file(route_cards);
      ctx.inputs = {route_cards};
    }
    CString result;
    const auto status = shotmix_route(
        route_query.c_str(), route_cards.empty() ? nullptr : cards_json.c_str(),
        &result.value);
    if (status != SHOTMIX_OK) return fail(status);
    ctx.config = {{"query", route_query},
                  {"cards", route_cards.empty() ? "<builtin>" : route_cards}};
    const Json doc = Json::parse(result.str());
    return deliver(ctx, out_path,
                   format == "text" ? route_text(doc) : doc.dump(2) + "\n");
  }));

  // ---- ablate ----
  auto* ablate = app.add_subcommand("ablate", "mixing-strategy comparison on "
                                              "synthetic worlds");
  std::string ablate_config;
  int ablate_seeds = -1;
  ablate->add_option("--config", ablate_config, "ablation config JSON")
      ->required();
  ablate->add_option("--seeds", ablate_seeds, "override seed count");
  ablate->callback(run("ablate", [&]() -> int {
    if (!format_in(format, {"json", "text"})) return 1;
    Json config = Json::parse(read_file(ablate_config), nullptr, false);
    if (config.is_discarded()) {
      std::cerr << "shotmix: error: malformed config " << ablate_config << "\n";
      return 1;
    }
    if (ablate_seeds > 0) config["seeds"] = ablate_seeds;
    config["master_seed"] = seed;
    config["workers"] = workers;
    CString report, table;
    const auto status =
        shotmix_ablate(config.dump().c_str(), &report.value, &table.value);
    if (status != SHOTMIX_OK) return fail(status);
    ctx.inputs = {ablate_config};
    ctx.config = config;
    const Json doc = Json::parse(report.str());
    return deliver(ctx, out_path,
                   format == "text" ? table.str() : doc.dump(2) + "\n");
  }));

  // ---- theory ----
  auto* theory = app.add_subcommand("theory", "annotation-bias theory checks");
  theory->require_subcommand(1);
  auto* theory_check = theory->add_subcommand("check", "run a verifier suite");
  std::string theory_suite = "all", theory_config;
  theory_check
      ->add_option("--suite", theory_suite,
                   "all|prop1|coverage|dilution|contrast|concentration")
      ->default_str("all");
  theory_check->add_option("--config", theory_config, "suite config JSON");
  theory_check->callback(run("theory check", [&]() -> int {
    if (!format_in(format, {"json", "csv", "text"})) return 1;
    std::string config_json;
    if (!theory_config.empty()) {
      config_json = read_file(theory_config);
      ctx.inputs = {theory_config};
    }
    Json config_snapshot = config_json.empty()
                               ? Json::object()
                               : Json::parse(config_json, nullptr, false);
    if (config_snapshot.is_discarded() || !config_snapshot.is_object()) {
      std::cerr << "shotmix: error: malformed config " << theory_config << "\n";
      return 1;
    }
    config_snapshot["workers"] = workers;
    config_json = config_snapshot.dump();
    ctx.config = {{"suite", theory_suite}, {"config", config_snapshot}};

    if (format == "csv") {
      if (theory_suite != "concentration" && theory_suite != "all") {
        std::cerr << "shotmix: error: --format csv applies to the "
                     "concentration suite\n";
        return 1;
      }
      CString csv;
      const auto status =
          shotmix_theory_concentration_csv(seed, config_json.c_str(), &csv.value);
      if (status != SHOTMIX_OK) return fail(status);
      return deliver(ctx, out_path, csv.str());
    }
    CString report;
    const auto status = shotmix_theory_check(theory_suite.c_str(), seed,
                                             config_json.c_str(), &report.value);
    if (status != SHOTMIX_OK) return fail(status);
    const Json doc = Json::parse(report.str());
    const int delivered =
        deliver(ctx, out_path,
                format == "text" ? theory_text(doc) : doc.dump(2) + "\n");
    if (delivered != 0) return delivered;
    return doc["pass"].get<bool>() ? 0 : 1;
  }));

  // ---- eval ----
  auto* eval = app.add_subcommand("eval", "exact-match scoring and comparison");
  eval->require_subcommand(1);

  auto* eval_score = eval->add_subcommand("score", "score one prediction file");
  std::string score_gold, score_pred;
  eval_score->add_option("--gold", score_gold, "gold QA JSONL")->required();
  eval_score->add_option("--pred", score_pred, "predictions JSONL")->required();
  eval_score->callback(run("eval score", [&]() -> int {
    if (!format_in(format, {"json", "text"})) return 1;
    CString report;
    const auto status = shotmix_eval_score(score_gold.c_str(),
                                           score_pred.c_str(), &report.value);
    if (status != SHOTMIX_OK) return fail(status);
    ctx.inputs = {score_gold, score_pred};
    ctx.config = {{"gold", score_gold}, {"pred", score_pred}};
    const Json doc = Json::parse(report.str());
    return deliver(ctx, out_path,
                   format == "text" ? score_text(doc) : doc.dump(2) + "\n");
  }));

  auto* eval_compare =
      eval->add_subcommand("compare", "compare prediction files");
  std::string compare_gold, compare_baseline, compare_names;
  std::vector<std::string> compare_preds;
  eval_compare->add_option("--gold", compare_gold, "gold QA JSONL")->required();
  eval_compare
      ->add_option("--pred", compare_preds, "predictions JSONL (repeatable)")
      ->required();
  eval_compare->add_option("--names", compare_names,
                           "comma-separated method names (default file stems)");
  eval_compare->add_option("--baseline", compare_baseline,
                           "baseline method for normalized scores");
  eval_compare->callback(run("eval compare", [&]() -> int {
    if (!format_in(format, {"json", "text"})) return 1;
    std::vector<std::string> names;
    if (!compare_names.empty()) {
      std::stringstream ss(compare_names);
      std::string name;
      while (std::getline(ss, name, ',')) names.push_back(name);
    } else {
      for (const auto& path : compare_preds) {
        std::string stem = path;
        if (const auto slash = stem.find_last_of('/'); slash != std::string::npos)
          stem = stem.substr(slash + 1);
        if (const auto dot = stem.find_last_of('.'); dot != std::string::npos)
          stem = stem.substr(0, dot);
        names.push_back(stem);
      }
    }
    if (names.size() != compare_preds.size()) {
      std::cerr << "shotmix: error: --names count must match --pred count\n";
      return 1;
    }
    std::vector<const char*> pred_ptrs, name_ptrs;
    for (const auto& p : compare_preds) pred_ptrs.push_back(p.c_str());
    for (const auto& n : names) name_ptrs.push_back(n.c_str());
    CString report;
    const auto status = shotmix_eval_compare(
        compare_gold.c_str(), pred_ptrs.data(), name_ptrs.data(),
        pred_ptrs.size(),
        compare_baseline.empty() ? nullptr : compare_baseline.c_str(),
        &report.value);
    if (status != SHOTMIX_OK) return fail(status);
    ctx.inputs = compare_preds;
    ctx.inputs.push_back(compare_gold);
    ctx.config = {{"gold", compare_gold},
                  {"preds", compare_preds},
                  {"names", names},
                  {"baseline",
                   compare_baseline.empty() ? "<none>" : compare_baseline}};
    const Json doc = Json::parse(report.str());
    return deliver(ctx, out_path,
                   format == "text" ? compare_text(doc) : doc.dump(2) + "\n");
  }));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }
  if (app.get_subcommands().empty()) {
    std::cout << app.help();
    return 1;
  }
  return rc;
}
