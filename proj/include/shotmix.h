/* C API for the shotmix core: opaque handles, status codes, and JSON string
 * payloads for structured data. Strings returned through char** parameters
 * are heap-allocated; release them with shotmix_string_free. On any failure
 * the return value is a nonzero status and shotmix_last_error() carries a
 * thread-local diagnostic message.
 */
#ifndef SHOTMIX_H
#define SHOTMIX_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define SHOTMIX_API __declspec(dllexport)
#else
#define SHOTMIX_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum shotmix_status {
  SHOTMIX_OK = 0,
  SHOTMIX_ERR_INVALID_ARGUMENT = 1,
  SHOTMIX_ERR_PARSE = 2,
  SHOTMIX_ERR_IO = 3,
  SHOTMIX_ERR_INTERNAL = 4
} shotmix_status;

SHOTMIX_API const char* shotmix_version(void);
SHOTMIX_API const char* shotmix_last_error(void);
SHOTMIX_API void shotmix_string_free(char* s);

/* ---- transfer ledger -------------------------------------------------- */

typedef struct shotmix_ledger shotmix_ledger;

/* warnings_json (nullable out): JSON array of load warnings, e.g. anchors
 * defaulted from the matrix diagonal. */
SHOTMIX_API shotmix_status shotmix_ledger_parse(const char* json,
                                                shotmix_ledger** out,
                                                char** warnings_json);
SHOTMIX_API shotmix_status shotmix_ledger_load(const char* path,
                                               shotmix_ledger** out,
                                               char** warnings_json);
SHOTMIX_API shotmix_status shotmix_ledger_to_json(const shotmix_ledger* ledger,
                                                  char** out_json);
SHOTMIX_API shotmix_status shotmix_ledger_save(const shotmix_ledger* ledger,
                                               const char* path);
/* Matrix block as CSV with dimension ids on both axes. */
SHOTMIX_API shotmix_status shotmix_ledger_matrix_csv(const shotmix_ledger* ledger,
                                                     char** out_csv);
SHOTMIX_API size_t shotmix_ledger_dim_count(const shotmix_ledger* ledger);
/* Normalized positive transfer gains {dims, T, Ttilde}. */
SHOTMIX_API shotmix_status shotmix_ledger_prior_json(const shotmix_ledger* ledger,
                                                     char** out_json);
/* Transfer-in / transfer-out counts and mean gains per dimension. */
SHOTMIX_API shotmix_status shotmix_ledger_summary_json(const shotmix_ledger* ledger,
                                                       char** out_json);
SHOTMIX_API void shotmix_ledger_free(shotmix_ledger* ledger);

/* ---- dynamic dimension mixing ----------------------------------------- */

typedef struct shotmix_mix_state shotmix_mix_state;

typedef struct shotmix_mix_params {
  double lambda_weight;  /* uniform exploration vs. adaptive reweighting */
  double beta_smoothing; /* update smoothness */
  int steps_per_round;   /* trainer steps between reweighting rounds */
  double eps;
} shotmix_mix_params;

SHOTMIX_API void shotmix_mix_params_init(shotmix_mix_params* params);

SHOTMIX_API shotmix_status shotmix_mix_state_init(const char* const* dims,
                                                  size_t n_dims,
                                                  const shotmix_mix_params* params,
                                                  shotmix_mix_state** out);
/* One reweighting round: gaps from the validation scores against the ledger
 * anchors, utilities through the transfer prior, blend, renormalize, smooth. */
SHOTMIX_API shotmix_status shotmix_mix_state_update(shotmix_mix_state* state,
                                                    const shotmix_ledger* ledger,
                                                    const double* validation_scores,
                                                    size_t n_scores);
SHOTMIX_API shotmix_status shotmix_mix_state_probs(const shotmix_mix_state* state,
                                                   double* out, size_t n);
SHOTMIX_API int shotmix_mix_state_round(const shotmix_mix_state* state);
/* One {round, p, g, u, V} JSON object per line. */
SHOTMIX_API shotmix_status shotmix_mix_state_trace_jsonl(
    const shotmix_mix_state* state, char** out);
SHOTMIX_API void shotmix_mix_state_free(shotmix_mix_state* state);

/* Full schedule on the synthetic trainer. config_json keys (all optional):
 * rounds, K, lambda, beta, eps, seed, batch_size, learning_rate, probe_steps,
 * dims (array of names; used when no ledger is given). When ledger is null
 * the trainer probes a synthetic suite to fill the ledger first. */
SHOTMIX_API shotmix_status shotmix_mix_run(const shotmix_ledger* ledger,
                                           const char* config_json,
                                           char** trace_jsonl,
                                           char** result_json);

/* ---- target-aware mixing and routing ----------------------------------- */

/* target == NULL: plans for every dimension, keyed by target. */
SHOTMIX_API shotmix_status shotmix_mix_plan(const shotmix_ledger* ledger,
                                            const char* target, double alpha,
                                            char** out_json);
/* Plans rendered as CSV: one row per target, one probability column per
 * dimension plus the alpha column. */
SHOTMIX_API shotmix_status shotmix_mix_plan_csv(const shotmix_ledger* ledger,
                                                double alpha, char** out_csv);
/* cards_json == NULL uses the built-in six expert cards. */
SHOTMIX_API shotmix_status shotmix_route(const char* query,
                                         const char* cards_json,
                                         char** out_json);
SHOTMIX_API shotmix_status shotmix_expert_cards(char** out_json);

/* ---- QA pipeline -------------------------------------------------------- */

SHOTMIX_API shotmix_status shotmix_ingest(const char* manifest_path,
                                          const char* out_path,
                                          char** report_json);
/* plan_path == NULL uses the shipped default plan; seed overrides the plan
 * seed. */
SHOTMIX_API shotmix_status shotmix_split(const char* qa_path,
                                         const char* plan_path, uint64_t seed,
                                         const char* out_path,
                                         char** report_json);
SHOTMIX_API shotmix_status shotmix_audit(const char* qa_path,
                                         const char* plan_path,
                                         char** report_json);
SHOTMIX_API shotmix_status shotmix_default_split_plan(char** out_json);

/* ---- evaluation --------------------------------------------------------- */

SHOTMIX_API shotmix_status shotmix_eval_score(const char* gold_path,
                                              const char* pred_path,
                                              char** report_json);
SHOTMIX_API shotmix_status shotmix_eval_compare(const char* gold_path,
                                                const char* const* pred_paths,
                                                const char* const* names,
                                                size_t n_methods,
                                                const char* baseline,
                                                char** report_json);

/* ---- theory checks ------------------------------------------------------ */

/* suite: all | prop1 | coverage | dilution | contrast | concentration.
 * config_json keys (optional): fuzz_pools, prop1_h_samples,
 * contrast_h_samples, sizes, replications, delta, mask_p, B, oracle_draws,
 * workers. */
SHOTMIX_API shotmix_status shotmix_theory_check(const char* suite,
                                                uint64_t seed,
                                                const char* config_json,
                                                char** report_json);
/* Per-size error quantiles of the concentration study as CSV. */
SHOTMIX_API shotmix_status shotmix_theory_concentration_csv(
    uint64_t seed, const char* config_json, char** out_csv);

/* ---- ablation ----------------------------------------------------------- */

/* config_json keys: variants (required array), seeds, master_seed, n_dims,
 * total_steps, rounds, budget_records, probe_steps, alpha, lambda, beta,
 * eps, batch_size, learning_rate, workers. */
SHOTMIX_API shotmix_status shotmix_ablate(const char* config_json,
                                          char** report_json,
                                          char** text_table);

#ifdef __cplusplus
}
#endif

#endif /* SHOTMIX_H */
