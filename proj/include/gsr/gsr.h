#ifndef GSR_GSR_H
#define GSR_GSR_H

/* C interface to the GSR engine: demonstration datasets, the demonstration
 * graph, shortest-path values, retrieval reweighting and the gridworld bench.
 *
 * Every function that can fail returns a gsr_status. On failure a message is
 * available from gsr_last_error() on the same thread until the next call.
 * Handles are opaque and owned by the caller; free them with the matching
 * *_free function (NULL is accepted). Strings returned through char** are
 * malloc'd and released with gsr_string_free. */

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define GSR_API __declspec(dllexport)
#else
#define GSR_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum gsr_status {
  GSR_OK = 0,
  GSR_MALFORMED_FILE = 1,
  GSR_DIMENSION_MISMATCH = 2,
  GSR_NON_FINITE = 3,
  GSR_EMPTY_DATASET = 4,
  GSR_FAILURE_TRAJECTORY = 5,
  GSR_STRUCTURE_MISMATCH = 6,
  GSR_IO_FAILURE = 7,
  GSR_INVALID_CONFIG = 8,
  GSR_NOT_TABULAR = 9,
  GSR_GENERATION_TIMEOUT = 10,
  GSR_INVARIANT_VIOLATION = 11,
  GSR_INVALID_ARGUMENT = 12,
  GSR_INTERNAL = 13
} gsr_status;

typedef struct gsr_dataset gsr_dataset;
typedef struct gsr_graph gsr_graph;
typedef struct gsr_values gsr_values;
typedef struct gsr_weights gsr_weights;
typedef struct gsr_bench_result gsr_bench_result;
typedef struct gsr_sweep gsr_sweep;

GSR_API const char* gsr_version(void);
GSR_API const char* gsr_status_name(gsr_status status);
GSR_API const char* gsr_last_error(void);
GSR_API void gsr_string_free(char* s);

/* Worker threads for parallel stages; 0 restores the default (GSR_THREADS,
 * else hardware concurrency). Results never depend on this value. */
GSR_API gsr_status gsr_set_threads(size_t n);
GSR_API size_t gsr_get_threads(void);

/* FNV-1a 64 of a byte range and of a file's contents. */
GSR_API uint64_t gsr_fnv1a64(const void* data, size_t n);
GSR_API gsr_status gsr_hash_file(const char* path, uint64_t* out);

/* ---- datasets ---------------------------------------------------------- */

typedef struct gsr_dataset_info {
  size_t embedding_dim;
  size_t action_dim;
  size_t trajectories;
  size_t total_steps;
  size_t failures;
  uint64_t fingerprint;
} gsr_dataset_info;

/* Format by extension: .gsrd (binary) or .jsonl. Failure trajectories are
 * rejected unless allow_failures is nonzero. */
GSR_API gsr_status gsr_dataset_load(const char* path, int allow_failures, gsr_dataset** out);
GSR_API gsr_status gsr_dataset_save(const gsr_dataset* ds, const char* path);
/* steps[i] steps per trajectory; embeddings and actions are the row-major
 * concatenation of all trajectories; success may be NULL (all succeed).
 * Explicit failure flags are kept; only success trajectories link to the goal. */
GSR_API gsr_status gsr_dataset_from_arrays(size_t embedding_dim, size_t action_dim, size_t trajectories,
                                           const size_t* steps, const uint8_t* success,
                                           const float* embeddings, const float* actions,
                                           gsr_dataset** out);
/* Per-step embedding concatenation of structurally identical datasets. */
GSR_API gsr_status gsr_dataset_concat(const gsr_dataset* const* parts, size_t n, gsr_dataset** out);
GSR_API gsr_status gsr_dataset_info_get(const gsr_dataset* ds, gsr_dataset_info* out);
GSR_API void gsr_dataset_free(gsr_dataset* ds);

/* ---- configuration ----------------------------------------------------- */

typedef struct gsr_graph_config {
  size_t stride;
  size_t tol_neighbors;
  double alpha;
  double augmented_edge_weight;
  double tol_floor_eps;
} gsr_graph_config;

typedef struct gsr_reweight_config {
  size_t k_retrieve;
  double beta1;
  double beta2;
  int bc_mode;
  int exclude_same_trajectory;
} gsr_reweight_config;

GSR_API void gsr_graph_config_default(gsr_graph_config* out);
GSR_API void gsr_reweight_config_default(gsr_reweight_config* out);
/* Task presets (can, nut_assembly, transport, pushing, spoon, band_tying,
 * tweezer) set beta1, beta2 and alpha; other fields are left alone. */
GSR_API gsr_status gsr_apply_preset(const char* name, gsr_graph_config* graph, gsr_reweight_config* reweight);
/* Comma-separated preset names. */
GSR_API const char* gsr_preset_names(void);

/* ---- graph ------------------------------------------------------------- */

typedef struct gsr_graph_info {
  size_t vertices;
  size_t sources;
  size_t trajectories;
  size_t dataset_edges;
  size_t augmented_edges;
  size_t goal_links;
  size_t degenerate_vertices;
  uint64_t content_hash;
} gsr_graph_info;

/* The graph keeps its own copy of the dataset. */
GSR_API gsr_status gsr_graph_build(const gsr_dataset* ds, const gsr_graph_config* cfg, gsr_graph** out);
/* Writes edges.txt, vertices.csv and graph.json into dir; dataset_path is
 * recorded so the export can be reloaded. */
GSR_API gsr_status gsr_graph_export(const gsr_graph* g, const char* dir, const char* dataset_path);
GSR_API gsr_status gsr_graph_import(const char* dir, gsr_graph** out);
GSR_API gsr_status gsr_graph_info_get(const gsr_graph* g, gsr_graph_info* out);
GSR_API gsr_status gsr_graph_config_get(const gsr_graph* g, gsr_graph_config* out);
GSR_API gsr_status gsr_graph_dataset(const gsr_graph* g, const gsr_dataset** out);
GSR_API void gsr_graph_free(gsr_graph* g);

/* ---- values ------------------------------------------------------------ */

GSR_API gsr_status gsr_values_compute(const gsr_graph* g, gsr_values** out);
/* Distance to goal (+inf if unreachable) and transition value (-inf without
 * a reachable successor; the goal vertex has none and reports -inf). */
GSR_API gsr_status gsr_values_get(const gsr_values* v, size_t vertex, double* dist, double* q_tilde);
GSR_API size_t gsr_values_count(const gsr_values* v);
/* CSV rows: vertex_id,dist,q_tilde. */
GSR_API gsr_status gsr_values_write_csv(const gsr_values* v, const char* path);
GSR_API void gsr_values_free(gsr_values* v);

/* ---- weights ----------------------------------------------------------- */

typedef struct gsr_weights_info {
  size_t steps;
  size_t active_sources;
  size_t empty_sources;
  double total_vertex_weight;
  double min;
  double max;
  double mean;
  double contrast; /* share of steps with weight < 0.5 or > 1.5 */
} gsr_weights_info;

GSR_API gsr_status gsr_weights_compute(const gsr_graph* g, const gsr_values* v, const gsr_reweight_config* cfg,
                                       gsr_weights** out);
/* Exact-state reweighting; soft selects exp(-d) shares over actions. */
GSR_API gsr_status gsr_weights_tabular(const gsr_graph* g, int soft, gsr_weights** out);
GSR_API gsr_status gsr_weights_load_csv(const char* path, gsr_weights** out);
/* CSV rows: traj_id,raw_index,weight. */
GSR_API gsr_status gsr_weights_write_csv(const gsr_weights* w, const char* path);
GSR_API gsr_status gsr_weights_info_get(const gsr_weights* w, gsr_weights_info* out);
GSR_API gsr_status gsr_weights_step(const gsr_weights* w, size_t traj, size_t raw_index, double* out);
/* JSON object with the n largest and n smallest step weights. */
GSR_API gsr_status gsr_weights_extremes_json(const gsr_weights* w, size_t n, char** out);
GSR_API void gsr_weights_free(gsr_weights* w);

typedef enum gsr_report_format {
  GSR_REPORT_HTML = 0,
  GSR_REPORT_SUMMARY_CSV = 1,
  GSR_REPORT_CDF_CSV = 2
} gsr_report_format;

/* One weight table per sweep point; labels and beta arrays may be NULL. */
GSR_API gsr_status gsr_report_write(const gsr_weights* const* tables, const char* const* labels,
                                    const double* beta1, const double* beta2, size_t n,
                                    gsr_report_format format, const char* path);

/* ---- bench ------------------------------------------------------------- */

typedef struct gsr_bench_config {
  const char* env;   /* "grid10", "open10", "grid6" */
  const char* demos; /* "retry:25,detour:10,optimal:15" */
  size_t eval_trials;
  size_t eval_horizon; /* 0: environment horizon */
  size_t reference_episodes;
  size_t k_policy;
  size_t proj_dim; /* 0: raw (x, y) embeddings */
  double noise_sigma;
  uint64_t embed_seed;
  gsr_graph_config graph;
  gsr_reweight_config reweight;
} gsr_bench_config;

typedef struct gsr_bench_metrics {
  size_t trials;
  double success_rate;
  double tts_mean; /* NaN without successes */
  double tts_std;
  double np;       /* NaN without successes or a degenerate reference */
} gsr_bench_metrics;

typedef struct gsr_bench_summary {
  uint64_t seed;
  gsr_bench_metrics gsr;
  gsr_bench_metrics uniform;
  size_t vertices;
  size_t augmented_edges;
  size_t sources;
  double total_weight;
  double contrast;
} gsr_bench_summary;

/* Scenario defaults: "standard", "sweep" (50-step rollout budget) or
 * "retry" (Retry demonstrators only). String fields point at static data. */
GSR_API gsr_status gsr_bench_config_default(const char* scenario, gsr_bench_config* out);
GSR_API gsr_status gsr_bench_run(const gsr_bench_config* cfg, uint64_t seed, int evaluate_uniform,
                                 gsr_bench_result** out);
GSR_API gsr_status gsr_bench_summary_get(const gsr_bench_result* r, gsr_bench_summary* out);
/* Episode log as JSON lines; which = 0 for GSR, 1 for uniform. */
GSR_API gsr_status gsr_bench_write_episodes(const gsr_bench_result* r, int which, const char* path);
GSR_API void gsr_bench_result_free(gsr_bench_result* r);
/* The demonstration dataset a bench run with this seed trains on. */
GSR_API gsr_status gsr_bench_generate(const gsr_bench_config* cfg, uint64_t seed, gsr_dataset** out);
/* Smooth random walks projected to dim dimensions, for timing runs. */
GSR_API gsr_status gsr_synthetic_dataset(size_t total_steps, size_t dim, size_t steps_per_traj, uint64_t seed,
                                         gsr_dataset** out);

GSR_API gsr_status gsr_bench_sweep(const gsr_bench_config* cfg, const double* beta1, size_t n_beta1,
                                   const double* beta2, size_t n_beta2, const double* alpha, size_t n_alpha,
                                   const uint64_t* seeds, size_t n_seeds, gsr_sweep** out);
GSR_API size_t gsr_sweep_rows(const gsr_sweep* s);
/* Per-seed rows, or seed-averaged rows when summary is nonzero. */
GSR_API gsr_status gsr_sweep_write_csv(const gsr_sweep* s, int summary, const char* path);
GSR_API void gsr_sweep_free(gsr_sweep* s);

#ifdef __cplusplus
}
#endif

#endif
