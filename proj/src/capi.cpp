#include "shotmix.h"

#include <cstdlib>
#include <cstring>
#include <string>

#include "shotmix/error.hpp"
#include "shotmix/eval.hpp"
#include "shotmix/mixer.hpp"
#include "shotmix/qa.hpp"
#include "shotmix/scheduler.hpp"
#include "shotmix/theory.hpp"
#include "shotmix/trainer.hpp"
#include "shotmix/transfer.hpp"

using namespace shotmix;

namespace {

thread_local std::string g_last_error;

shotmix_status map_code(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return SHOTMIX_ERR_INVALID_ARGUMENT;
    case ErrorCode::ParseError: return SHOTMIX_ERR_PARSE;
    case ErrorCode::IoError: return SHOTMIX_ERR_IO;
    case ErrorCode::Internal: return SHOTMIX_ERR_INTERNAL;
  }
  return SHOTMIX_ERR_INTERNAL;
}

template <typename Fn>
shotmix_status guarded(Fn&& fn) {
  try {
    fn();
    g_last_error.clear();
    return SHOTMIX_OK;
  } catch (const Error& e) {
    g_last_error = e.what();
    return map_code(e.code());
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return SHOTMIX_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown failure";
    return SHOTMIX_ERR_INTERNAL;
  }
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void set_out(char** slot, const std::string& value) {
  if (slot) *slot = dup_string(value);
}

void require(bool condition, const char* message) {
  if (!condition) fail_invalid(message);
}

Json parse_optional_config(const char* config_json, const char* ctx) {
  if (!config_json || std::strlen(config_json) == 0) return Json::object();
  Json doc = parse_json(config_json, ctx);
  if (!doc.is_object()) fail_parse(std::string(ctx) + ": expected a JSON object");
  return doc;
}

double number_or(const Json& doc, const char* key, double fallback) {
  if (!doc.contains(key)) return fallback;
  if (!doc.at(key).is_number())
    fail_parse(std::string("config: '") + key + "' must be a number");
  return doc.at(key).get<double>();
}

TheorySuiteConfig theory_config_from_json(const Json& doc) {
  TheorySuiteConfig cfg;
  cfg.fuzz_pools = static_cast<int>(number_or(doc, "fuzz_pools", cfg.fuzz_pools));
  cfg.prop1_h_samples =
      static_cast<int>(number_or(doc, "prop1_h_samples", cfg.prop1_h_samples));
  cfg.contrast_h_samples = static_cast<int>(
      number_or(doc, "contrast_h_samples", cfg.contrast_h_samples));
  if (doc.contains("sizes")) {
    cfg.sizes.clear();
    for (const auto& v : doc.at("sizes"))
      cfg.sizes.push_back(static_cast<std::size_t>(v.get<double>()));
  }
  cfg.replications =
      static_cast<int>(number_or(doc, "replications", cfg.replications));
  cfg.delta = number_or(doc, "delta", cfg.delta);
  cfg.mask_p = number_or(doc, "mask_p", cfg.mask_p);
  cfg.offset_bound = number_or(doc, "B", cfg.offset_bound);
  cfg.oracle_draws = static_cast<std::size_t>(
      number_or(doc, "oracle_draws", static_cast<double>(cfg.oracle_draws)));
  cfg.workers = static_cast<int>(number_or(doc, "workers", cfg.workers));
  return cfg;
}

}  // namespace

struct shotmix_ledger {
  TransferLedger ledger;
};

struct shotmix_mix_state {
  MixState state;
  MixHyperparams hyper;
};

extern "C" {

const char* shotmix_version(void) { return "0.1.0"; }

const char* shotmix_last_error(void) { return g_last_error.c_str(); }

void shotmix_string_free(char* s) { std::free(s); }

shotmix_status shotmix_ledger_parse(const char* json, shotmix_ledger** out,
                                    char** warnings_json) {
  return guarded([&] {
    require(json && out, "ledger_parse: null argument");
    auto result = parse_ledger(parse_json(json, "ledger"), "ledger");
    *out = new shotmix_ledger{std::move(result.ledger)};
    set_out(warnings_json, Json(result.warnings).dump());
  });
}

shotmix_status shotmix_ledger_load(const char* path, shotmix_ledger** out,
                                   char** warnings_json) {
  return guarded([&] {
    require(path && out, "ledger_load: null argument");
    auto result = load_ledger(path);
    *out = new shotmix_ledger{std::move(result.ledger)};
    set_out(warnings_json, Json(result.warnings).dump());
  });
}

shotmix_status shotmix_ledger_to_json(const shotmix_ledger* ledger,
                                      char** out_json) {
  return guarded([&] {
    require(ledger && out_json, "ledger_to_json: null argument");
    set_out(out_json, ledger_to_json(ledger->ledger).dump());
  });
}

shotmix_status shotmix_ledger_save(const shotmix_ledger* ledger,
                                   const char* path) {
  return guarded([&] {
    require(ledger && path, "ledger_save: null argument");
    save_ledger(ledger->ledger, path);
  });
}

shotmix_status shotmix_ledger_matrix_csv(const shotmix_ledger* ledger,
                                         char** out_csv) {
  return guarded([&] {
    require(ledger && out_csv, "ledger_matrix_csv: null argument");
    set_out(out_csv, ledger_matrix_csv(ledger->ledger));
  });
}

size_t shotmix_ledger_dim_count(const shotmix_ledger* ledger) {
  return ledger ? ledger->ledger.size() : 0;
}

shotmix_status shotmix_ledger_prior_json(const shotmix_ledger* ledger,
                                         char** out_json) {
  return guarded([&] {
    require(ledger && out_json, "ledger_prior_json: null argument");
    set_out(out_json, prior_to_json(compute_prior(ledger->ledger)).dump());
  });
}

shotmix_status shotmix_ledger_summary_json(const shotmix_ledger* ledger,
                                           char** out_json) {
  return guarded([&] {
    require(ledger && out_json, "ledger_summary_json: null argument");
    set_out(out_json, summary_to_json(summarize_transfer(ledger->ledger)).dump());
  });
}

void shotmix_ledger_free(shotmix_ledger* ledger) { delete ledger; }

void shotmix_mix_params_init(shotmix_mix_params* params) {
  if (!params) return;
  const MixHyperparams defaults;
  params->lambda_weight = defaults.lambda;
  params->beta_smoothing = defaults.beta;
  params->steps_per_round = defaults.steps_per_round;
  params->eps = defaults.eps;
}

shotmix_status shotmix_mix_state_init(const char* const* dims, size_t n_dims,
                                      const shotmix_mix_params* params,
                                      shotmix_mix_state** out) {
  return guarded([&] {
    require(dims && out && n_dims > 0, "mix_state_init: null or empty input");
    MixHyperparams hyper;
    if (params) {
      hyper.lambda = params->lambda_weight;
      hyper.beta = params->beta_smoothing;
      hyper.steps_per_round = params->steps_per_round;
      hyper.eps = params->eps;
    }
    std::vector<DimensionId> names;
    for (size_t i = 0; i < n_dims; ++i) {
      require(dims[i] != nullptr, "mix_state_init: null dimension name");
      names.emplace_back(dims[i]);
    }
    *out = new shotmix_mix_state{init_state(names, hyper), hyper};
  });
}

shotmix_status shotmix_mix_state_update(shotmix_mix_state* state,
                                        const shotmix_ledger* ledger,
                                        const double* validation_scores,
                                        size_t n_scores) {
  return guarded([&] {
    require(state && ledger && validation_scores,
            "mix_state_update: null argument");
    ValidationSnapshot snapshot;
    snapshot.scores.assign(validation_scores, validation_scores + n_scores);
    snapshot.round = state->state.round;
    if (ledger->ledger.dims != state->state.dims)
      fail_invalid("mix_state_update: ledger dims do not match state dims");
    const auto gaps =
        compute_gaps(snapshot, ledger->ledger.anchors, state->hyper.eps);
    update_distribution(state->state, gaps, compute_prior(ledger->ledger),
                        state->hyper);
    state->state.history.back().validation = snapshot.scores;
  });
}

shotmix_status shotmix_mix_state_probs(const shotmix_mix_state* state,
                                       double* out, size_t n) {
  return guarded([&] {
    require(state && out, "mix_state_probs: null argument");
    require(n == state->state.p.size(), "mix_state_probs: buffer size mismatch");
    for (size_t i = 0; i < n; ++i) out[i] = state->state.p[i];
  });
}

int shotmix_mix_state_round(const shotmix_mix_state* state) {
  return state ? state->state.round : -1;
}

shotmix_status shotmix_mix_state_trace_jsonl(const shotmix_mix_state* state,
                                             char** out) {
  return guarded([&] {
    require(state && out, "mix_state_trace: null argument");
    set_out(out, schedule_trace_jsonl(state->state));
  });
}

void shotmix_mix_state_free(shotmix_mix_state* state) { delete state; }

shotmix_status shotmix_mix_run(const shotmix_ledger* ledger,
                               const char* config_json, char** trace_jsonl,
                               char** result_json) {
  return guarded([&] {
    require(result_json || trace_jsonl, "mix_run: no output requested");
    const Json cfg = parse_optional_config(config_json, "mix_run config");

    MixHyperparams hyper;
    hyper.lambda = number_or(cfg, "lambda", hyper.lambda);
    hyper.beta = number_or(cfg, "beta", hyper.beta);
    hyper.steps_per_round =
        static_cast<int>(number_or(cfg, "K", hyper.steps_per_round));
    hyper.eps = number_or(cfg, "eps", hyper.eps);
    const int rounds = static_cast<int>(number_or(cfg, "rounds", 30));
    const auto seed = static_cast<std::uint64_t>(number_or(cfg, "seed", 0));
    const int probe_steps =
        static_cast<int>(number_or(cfg, "probe_steps", 400));
    TrainerOptions options;
    options.batch_size =
        static_cast<int>(number_or(cfg, "batch_size", options.batch_size));
    options.learning_rate =
        number_or(cfg, "learning_rate", options.learning_rate);

    std::vector<DimensionId> dims;
    if (ledger) {
      dims = ledger->ledger.dims;
    } else if (cfg.contains("dims")) {
      dims = require_string_array(cfg, "dims", "mix_run config");
    } else {
      for (int i = 0; i < 6; ++i) dims.push_back("d" + std::to_string(i));
    }

    SyntheticSuite suite = make_suite_for_dims(dims, seed);
    SoftmaxTrainer trainer(suite, options, seed + 1);
    // Without a caller ledger the trainer probes its own transfer matrix
    // (target-only anchors included) before the schedule starts.
    TransferLedger used = ledger ? ledger->ledger
                                 : compute_transfer_ledger(suite, options,
                                                           probe_steps, seed);
    auto result = run_schedule(trainer, used, hyper, rounds);

    set_out(trace_jsonl, schedule_trace_jsonl(result.state));
    Json doc;
    doc["state"] = mix_state_to_json(result.state);
    doc["ledger"] = ledger_to_json(used);
    doc["ledger_probed"] = ledger == nullptr;
    doc["config"] = {{"rounds", rounds},
                     {"K", hyper.steps_per_round},
                     {"lambda", hyper.lambda},
                     {"beta", hyper.beta},
                     {"eps", hyper.eps},
                     {"seed", seed},
                     {"batch_size", options.batch_size},
                     {"learning_rate", options.learning_rate}};
    Json validation = Json::array();
    for (const auto& snap : result.snapshots) validation.push_back(snap.scores);
    doc["validation"] = validation;
    set_out(result_json, doc.dump());
  });
}

shotmix_status shotmix_mix_plan(const shotmix_ledger* ledger,
                                const char* target, double alpha,
                                char** out_json) {
  return guarded([&] {
    require(ledger && out_json, "mix_plan: null argument");
    if (target) {
      set_out(out_json,
              target_mix_to_json(build_target_mix(ledger->ledger, target, alpha))
                  .dump());
      return;
    }
    Json doc = Json::object();
    for (const auto& [dim, mix] : build_all_mixes(ledger->ledger, alpha))
      doc[dim] = target_mix_to_json(mix);
    set_out(out_json, doc.dump());
  });
}

shotmix_status shotmix_mix_plan_csv(const shotmix_ledger* ledger, double alpha,
                                    char** out_csv) {
  return guarded([&] {
    require(ledger && out_csv, "mix_plan_csv: null argument");
    const auto mixes = build_all_mixes(ledger->ledger, alpha);
    std::string csv = "target,alpha";
    for (const auto& dim : ledger->ledger.dims) csv += "," + dim;
    csv += "\n";
    for (const auto& dim : ledger->ledger.dims) {
      const auto& mix = mixes.at(dim);
      csv += dim + "," + Json(mix.alpha).dump();
      for (const auto& col : ledger->ledger.dims) {
        const auto it = mix.p.find(col);
        csv += "," + Json(it == mix.p.end() ? 0.0 : it->second).dump();
      }
      csv += "\n";
    }
    set_out(out_csv, csv);
  });
}

shotmix_status shotmix_route(const char* query, const char* cards_json,
                             char** out_json) {
  return guarded([&] {
    require(query && out_json, "route: null argument");
    std::vector<ExpertCard> cards;
    if (cards_json)
      cards = parse_expert_cards(parse_json(cards_json, "cards"), "cards");
    else
      cards = builtin_expert_cards();
    set_out(out_json, route_result_to_json(route(query, cards)).dump());
  });
}

shotmix_status shotmix_expert_cards(char** out_json) {
  return guarded([&] {
    require(out_json, "expert_cards: null argument");
    Json doc = Json::array();
    for (const auto& card : builtin_expert_cards())
      doc.push_back(Json{{"dim", card.dim}, {"description", card.description}});
    set_out(out_json, doc.dump());
  });
}

shotmix_status shotmix_ingest(const char* manifest_path, const char* out_path,
                              char** report_json) {
  return guarded([&] {
    require(manifest_path && out_path, "ingest: null argument");
    auto [records, report] = ingest(read_raw_manifest(manifest_path));
    write_qa_records(out_path, records);
    Json doc{{"input", report.input},
             {"unified", report.unified},
             {"captions", report.captions},
             {"filtered", report.filtered},
             {"dedup_dropped", report.dedup.dropped},
             {"dedup_dropped_per_source", report.dedup.dropped_per_source}};
    set_out(report_json, doc.dump());
  });
}

shotmix_status shotmix_split(const char* qa_path, const char* plan_path,
                             uint64_t seed, const char* out_path,
                             char** report_json) {
  return guarded([&] {
    require(qa_path && out_path, "split: null argument");
    SplitPlan plan = plan_path ? parse_split_plan(
                                     parse_json(read_text_file(plan_path),
                                                plan_path),
                                     plan_path)
                               : default_split_plan();
    plan.seed = seed;
    auto [records, report] = build_splits(read_qa_records(qa_path), plan);
    write_qa_records(out_path, records);
    Json drops = Json::array();
    for (const auto& d : report.leakage_dropped)
      drops.push_back(Json{{"record_id", d.record_id},
                           {"media_hash", d.media_hash},
                           {"conflicts_with", d.conflicting_record_id}});
    Json doc{{"per_task_counts", report.per_task_counts},
             {"leakage_dropped", drops},
             {"records_out", records.size()}};
    set_out(report_json, doc.dump());
  });
}

shotmix_status shotmix_audit(const char* qa_path, const char* plan_path,
                             char** report_json) {
  return guarded([&] {
    require(qa_path, "audit: null argument");
    std::optional<SplitPlan> plan;
    if (plan_path)
      plan = parse_split_plan(
          parse_json(read_text_file(plan_path), plan_path), plan_path);
    const auto report =
        audit(read_qa_records(qa_path), plan ? &*plan : nullptr);
    Json doc{{"records", report.records},
             {"violations", report.violations},
             {"clean", report.clean()}};
    set_out(report_json, doc.dump());
  });
}

shotmix_status shotmix_default_split_plan(char** out_json) {
  return guarded([&] {
    require(out_json, "default_split_plan: null argument");
    set_out(out_json, split_plan_to_json(default_split_plan()).dump());
  });
}

shotmix_status shotmix_eval_score(const char* gold_path, const char* pred_path,
                                  char** report_json) {
  return guarded([&] {
    require(gold_path && pred_path && report_json, "eval_score: null argument");
    const auto report = score_records(read_qa_records(gold_path),
                                      read_predictions(pred_path));
    set_out(report_json, score_report_to_json(report).dump());
  });
}

shotmix_status shotmix_eval_compare(const char* gold_path,
                                    const char* const* pred_paths,
                                    const char* const* names, size_t n_methods,
                                    const char* baseline, char** report_json) {
  return guarded([&] {
    require(gold_path && pred_paths && names && report_json && n_methods > 0,
            "eval_compare: null argument");
    std::map<std::string, std::vector<Prediction>> methods;
    for (size_t i = 0; i < n_methods; ++i) {
      require(pred_paths[i] && names[i], "eval_compare: null method entry");
      if (!methods.emplace(names[i], read_predictions(pred_paths[i])).second)
        fail_invalid(std::string("eval_compare: duplicate method name '") +
                     names[i] + "'");
    }
    const auto report = compare_records(
        read_qa_records(gold_path), methods,
        baseline ? std::optional<std::string>(baseline) : std::nullopt);
    set_out(report_json, compare_report_to_json(report).dump());
  });
}

shotmix_status shotmix_theory_check(const char* suite, uint64_t seed,
                                    const char* config_json,
                                    char** report_json) {
  return guarded([&] {
    require(suite && report_json, "theory_check: null argument");
    const auto cfg =
        theory_config_from_json(parse_optional_config(config_json, "theory config"));
    set_out(report_json, run_theory_suite(suite, seed, cfg).dump());
  });
}

shotmix_status shotmix_theory_concentration_csv(uint64_t seed,
                                                const char* config_json,
                                                char** out_csv) {
  return guarded([&] {
    require(out_csv, "theory_concentration_csv: null argument");
    const auto cfg =
        theory_config_from_json(parse_optional_config(config_json, "theory config"));
    BernoulliUniformMechanism mechanism(6, cfg.mask_p, cfg.offset_bound);
    const auto report =
        check_concentration(mechanism, cfg.sizes, cfg.replications, cfg.delta,
                            seed, cfg.workers, cfg.oracle_draws);
    set_out(out_csv, concentration_quantiles_csv(report));
  });
}

shotmix_status shotmix_ablate(const char* config_json, char** report_json,
                              char** text_table) {
  return guarded([&] {
    require(config_json, "ablate: null config");
    require(report_json || text_table, "ablate: no output requested");
    const Json cfg = parse_json(config_json, "ablate config");
    AblationConfig config;
    config.variants = require_string_array(cfg, "variants", "ablate config");
    config.seeds = static_cast<int>(number_or(cfg, "seeds", config.seeds));
    config.master_seed = static_cast<std::uint64_t>(
        number_or(cfg, "master_seed", static_cast<double>(config.master_seed)));
    config.n_dims = static_cast<int>(number_or(cfg, "n_dims", config.n_dims));
    config.total_steps = static_cast<long>(
        number_or(cfg, "total_steps", static_cast<double>(config.total_steps)));
    config.rounds = static_cast<int>(number_or(cfg, "rounds", config.rounds));
    config.budget_records = static_cast<long>(number_or(
        cfg, "budget_records", static_cast<double>(config.budget_records)));
    config.probe_steps =
        static_cast<int>(number_or(cfg, "probe_steps", config.probe_steps));
    config.alpha = number_or(cfg, "alpha", config.alpha);
    config.hyper.lambda = number_or(cfg, "lambda", config.hyper.lambda);
    config.hyper.beta = number_or(cfg, "beta", config.hyper.beta);
    config.hyper.eps = number_or(cfg, "eps", config.hyper.eps);
    config.options.batch_size = static_cast<int>(
        number_or(cfg, "batch_size", config.options.batch_size));
    config.options.learning_rate =
        number_or(cfg, "learning_rate", config.options.learning_rate);
    config.workers = static_cast<int>(number_or(cfg, "workers", config.workers));

    const auto table = run_ablation(config);
    if (report_json) set_out(report_json, ablation_to_json(table).dump());
    if (text_table) set_out(text_table, ablation_to_text(table));
  });
}

}  // extern "C"
