#include "gsr/gsr.h"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <limits>
#include <memory>
#include <new>
#include <string>
#include <vector>

#include "core/bench.hpp"
#include "core/dataset.hpp"
#include "core/error.hpp"
#include "core/graph.hpp"
#include "core/hash.hpp"
#include "core/parallel.hpp"
#include "core/reweight.hpp"
#include "core/text_io.hpp"
#include "core/value.hpp"
#include "json.hpp"

struct gsr_dataset {
  gsr::DemoDataset ds;
};

struct gsr_graph {
  gsr::DemoGraph graph;
  gsr_dataset dataset;
};

struct gsr_values {
  gsr::ValueTable table;
};

struct gsr_weights {
  std::vector<std::vector<double>> steps;
  std::size_t active_sources = 0;
  std::size_t empty_sources = 0;
  double total_vertex_weight = std::numeric_limits<double>::quiet_NaN();
};

struct gsr_bench_result {
  gsr::bench::ScenarioResult result;
};

struct gsr_sweep {
  std::vector<gsr::bench::SweepRow> rows;
};

namespace {

thread_local std::string g_last_error;

gsr_status to_status(gsr::ErrorCode code) {
  using gsr::ErrorCode;
  switch (code) {
    case ErrorCode::MalformedFile: return GSR_MALFORMED_FILE;
    case ErrorCode::DimensionMismatch: return GSR_DIMENSION_MISMATCH;
    case ErrorCode::NonFinite: return GSR_NON_FINITE;
    case ErrorCode::EmptyDataset: return GSR_EMPTY_DATASET;
    case ErrorCode::FailureTrajectory: return GSR_FAILURE_TRAJECTORY;
    case ErrorCode::StructureMismatch: return GSR_STRUCTURE_MISMATCH;
    case ErrorCode::IoFailure: return GSR_IO_FAILURE;
    case ErrorCode::InvalidConfig: return GSR_INVALID_CONFIG;
    case ErrorCode::NotTabular: return GSR_NOT_TABULAR;
    case ErrorCode::GenerationTimeout: return GSR_GENERATION_TIMEOUT;
    case ErrorCode::InvariantViolation: return GSR_INVARIANT_VIOLATION;
  }
  return GSR_INTERNAL;
}

gsr_status set_error(gsr_status status, std::string message) {
  g_last_error = std::move(message);
  return status;
}

template <typename Fn>
gsr_status guarded(Fn&& fn) {
  try {
    g_last_error.clear();
    fn();
    return GSR_OK;
  } catch (const gsr::Error& e) {
    return set_error(to_status(e.code()), e.what());
  } catch (const std::bad_alloc&) {
    return set_error(GSR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return set_error(GSR_INTERNAL, e.what());
  } catch (...) {
    return set_error(GSR_INTERNAL, "unknown exception");
  }
}

#define GSR_REQUIRE(cond)                                                   \
  do {                                                                      \
    if (!(cond)) return set_error(GSR_INVALID_ARGUMENT, "null argument: " #cond); \
  } while (0)

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out == nullptr) throw std::bad_alloc();
  std::memcpy(out, s.data(), s.size() + 1);
  return out;
}

gsr::GraphConfig from_c(const gsr_graph_config& c) {
  gsr::GraphConfig g;
  g.stride = c.stride;
  g.tol_neighbors = c.tol_neighbors;
  g.alpha = c.alpha;
  g.augmented_edge_weight = c.augmented_edge_weight;
  g.tol_floor_eps = c.tol_floor_eps;
  return g;
}

gsr_graph_config to_c(const gsr::GraphConfig& g) {
  return {g.stride, g.tol_neighbors, g.alpha, g.augmented_edge_weight, g.tol_floor_eps};
}

gsr::ReweightConfig from_c(const gsr_reweight_config& c) {
  gsr::ReweightConfig r;
  r.k_retrieve = c.k_retrieve;
  r.beta1 = c.beta1;
  r.beta2 = c.beta2;
  r.bc_mode = c.bc_mode != 0;
  r.exclude_same_trajectory = c.exclude_same_trajectory != 0;
  return r;
}

gsr_reweight_config to_c(const gsr::ReweightConfig& r) {
  return {r.k_retrieve, r.beta1, r.beta2, r.bc_mode ? 1 : 0, r.exclude_same_trajectory ? 1 : 0};
}

gsr_bench_metrics to_c(const gsr::bench::EvalMetrics& m) {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  return {m.trials, m.success_rate, m.tts_mean.value_or(nan), m.tts_std.value_or(nan), m.np.value_or(nan)};
}

gsr::bench::Scenario scenario_from(const gsr_bench_config& c) {
  if (c.env == nullptr || c.demos == nullptr) gsr::fail(gsr::ErrorCode::InvalidConfig, "bench env and demos are required");
  gsr::bench::Scenario s;
  s.env = c.env;
  s.demos = gsr::bench::parse_demo_mix(c.demos);
  s.eval_trials = c.eval_trials;
  s.eval_horizon = c.eval_horizon;
  s.reference_episodes = c.reference_episodes;
  s.k_policy = c.k_policy;
  s.embed.proj_dim = c.proj_dim;
  s.embed.noise_sigma = c.noise_sigma;
  s.embed.seed = c.embed_seed;
  s.graph = from_c(c.graph);
  s.reweight = from_c(c.reweight);
  if (s.eval_trials == 0 || s.reference_episodes == 0) {
    gsr::fail(gsr::ErrorCode::InvalidConfig, "eval_trials and reference_episodes must be >= 1");
  }
  s.graph.validate();
  s.reweight.validate();
  return s;
}

struct Preset {
  const char* name;
  double beta1, beta2, alpha;
};

constexpr Preset kPresets[] = {
    {"can", 2.0, 1.0, 1.0},     {"nut_assembly", 2.0, 0.33, 1.0}, {"transport", 2.0, 0.25, 1.0},
    {"pushing", 1.0, 0.25, 1.0}, {"spoon", 1.0, 0.25, 1.0},        {"band_tying", 1.0, 0.25, 1.25},
    {"tweezer", 1.0, 0.25, 1.25},
};

}  // namespace

extern "C" {

const char* gsr_version(void) { return "1.0.0"; }

const char* gsr_status_name(gsr_status status) {
  switch (status) {
    case GSR_OK: return "Ok";
    case GSR_MALFORMED_FILE: return "MalformedFile";
    case GSR_DIMENSION_MISMATCH: return "DimensionMismatch";
    case GSR_NON_FINITE: return "NonFinite";
    case GSR_EMPTY_DATASET: return "EmptyDataset";
    case GSR_FAILURE_TRAJECTORY: return "FailureTrajectory";
    case GSR_STRUCTURE_MISMATCH: return "StructureMismatch";
    case GSR_IO_FAILURE: return "IoFailure";
    case GSR_INVALID_CONFIG: return "InvalidConfig";
    case GSR_NOT_TABULAR: return "NotTabular";
    case GSR_GENERATION_TIMEOUT: return "GenerationTimeout";
    case GSR_INVARIANT_VIOLATION: return "InvariantViolation";
    case GSR_INVALID_ARGUMENT: return "InvalidArgument";
    case GSR_INTERNAL: return "Internal";
  }
  return "Unknown";
}

const char* gsr_last_error(void) { return g_last_error.c_str(); }

void gsr_string_free(char* s) { std::free(s); }

gsr_status gsr_set_threads(size_t n) {
  return guarded([&] { gsr::set_thread_count(n); });
}

size_t gsr_get_threads(void) { return gsr::thread_count(); }

uint64_t gsr_fnv1a64(const void* data, size_t n) {
  gsr::Fnv1a64 h;
  if (data != nullptr) h.update(data, n);
  return h.digest();
}

gsr_status gsr_hash_file(const char* path, uint64_t* out) {
  GSR_REQUIRE(path && out);
  return guarded([&] { *out = gsr::fnv1a64(gsr::read_text_file(path)); });
}

gsr_status gsr_dataset_load(const char* path, int allow_failures, gsr_dataset** out) {
  GSR_REQUIRE(path && out);
  *out = nullptr;
  return guarded([&] {
    gsr::DatasetOptions opt;
    opt.allow_failures = allow_failures != 0;
    *out = new gsr_dataset{gsr::load_dataset(path, opt)};
  });
}

gsr_status gsr_dataset_save(const gsr_dataset* ds, const char* path) {
  GSR_REQUIRE(ds && path);
  return guarded([&] { gsr::save_dataset(ds->ds, path); });
}

gsr_status gsr_dataset_from_arrays(size_t embedding_dim, size_t action_dim, size_t trajectories,
                                   const size_t* steps, const uint8_t* success, const float* embeddings,
                                   const float* actions, gsr_dataset** out) {
  GSR_REQUIRE(out);
  *out = nullptr;
  GSR_REQUIRE(trajectories == 0 || steps);
  return guarded([&] {
    std::size_t total = 0;
    for (std::size_t t = 0; t < trajectories; ++t) total += steps[t];
    if (total > 0 && (embeddings == nullptr || (action_dim > 0 && actions == nullptr))) {
      gsr::fail(gsr::ErrorCode::InvalidConfig, "missing embedding or action arrays");
    }
    std::vector<gsr::Trajectory> trajs(trajectories);
    std::size_t offset = 0;
    for (std::size_t t = 0; t < trajectories; ++t) {
      trajs[t].embeddings.assign(embeddings + offset * embedding_dim, embeddings + (offset + steps[t]) * embedding_dim);
      if (action_dim > 0) {
        trajs[t].actions.assign(actions + offset * action_dim, actions + (offset + steps[t]) * action_dim);
      }
      trajs[t].success = success == nullptr || success[t] != 0;
      offset += steps[t];
    }
    gsr::DemoDataset ds(embedding_dim, action_dim, std::move(trajs));
    gsr::DatasetOptions opt;
    opt.allow_failures = true;
    ds.validate(opt);
    *out = new gsr_dataset{std::move(ds)};
  });
}

gsr_status gsr_dataset_concat(const gsr_dataset* const* parts, size_t n, gsr_dataset** out) {
  GSR_REQUIRE(parts && out);
  *out = nullptr;
  return guarded([&] {
    std::vector<gsr::DemoDataset> copies;
    for (std::size_t i = 0; i < n; ++i) {
      if (parts[i] == nullptr) gsr::fail(gsr::ErrorCode::InvalidConfig, "null dataset in concat");
      copies.push_back(parts[i]->ds);
    }
    *out = new gsr_dataset{gsr::concat_embeddings(copies)};
  });
}

gsr_status gsr_dataset_info_get(const gsr_dataset* ds, gsr_dataset_info* out) {
  GSR_REQUIRE(ds && out);
  return guarded([&] {
    out->embedding_dim = ds->ds.embedding_dim();
    out->action_dim = ds->ds.action_dim();
    out->trajectories = ds->ds.num_trajectories();
    out->total_steps = ds->ds.total_steps();
    out->failures = static_cast<std::size_t>(std::count_if(
        ds->ds.trajectories().begin(), ds->ds.trajectories().end(), [](const auto& t) { return !t.success; }));
    out->fingerprint = ds->ds.fingerprint();
  });
}

void gsr_dataset_free(gsr_dataset* ds) { delete ds; }

void gsr_graph_config_default(gsr_graph_config* out) {
  if (out != nullptr) *out = to_c(gsr::GraphConfig{});
}

void gsr_reweight_config_default(gsr_reweight_config* out) {
  if (out != nullptr) *out = to_c(gsr::ReweightConfig{});
}

gsr_status gsr_apply_preset(const char* name, gsr_graph_config* graph, gsr_reweight_config* reweight) {
  GSR_REQUIRE(name && graph && reweight);
  for (const Preset& p : kPresets) {
    if (std::strcmp(p.name, name) == 0) {
      reweight->beta1 = p.beta1;
      reweight->beta2 = p.beta2;
      graph->alpha = p.alpha;
      g_last_error.clear();
      return GSR_OK;
    }
  }
  return set_error(GSR_INVALID_CONFIG, std::string("unknown preset '") + name + "'");
}

const char* gsr_preset_names(void) {
  return "can,nut_assembly,transport,pushing,spoon,band_tying,tweezer";
}

gsr_status gsr_graph_build(const gsr_dataset* ds, const gsr_graph_config* cfg, gsr_graph** out) {
  GSR_REQUIRE(ds && cfg && out);
  *out = nullptr;
  return guarded([&] {
    auto g = std::make_unique<gsr_graph>();
    g->graph = gsr::build_graph(ds->ds, from_c(*cfg));
    g->dataset.ds = ds->ds;
    *out = g.release();
  });
}

gsr_status gsr_graph_export(const gsr_graph* g, const char* dir, const char* dataset_path) {
  GSR_REQUIRE(g && dir && dataset_path);
  return guarded([&] {
    gsr::ensure_directory(dir);
    gsr::export_graph(g->graph, dir, dataset_path);
  });
}

gsr_status gsr_graph_import(const char* dir, gsr_graph** out) {
  GSR_REQUIRE(dir && out);
  *out = nullptr;
  return guarded([&] {
    gsr::ImportedGraph imp = gsr::import_graph(dir);
    auto g = std::make_unique<gsr_graph>();
    g->graph = std::move(imp.graph);
    g->dataset.ds = std::move(imp.dataset);
    *out = g.release();
  });
}

gsr_status gsr_graph_info_get(const gsr_graph* g, gsr_graph_info* out) {
  GSR_REQUIRE(g && out);
  return guarded([&] {
    const gsr::DemoGraph& gr = g->graph;
    out->vertices = gr.num_vertices();
    out->sources = gr.num_sources();
    out->trajectories = gr.num_trajectories();
    out->dataset_edges = gr.count_edges(gsr::EdgeKind::Dataset);
    out->augmented_edges = gr.count_edges(gsr::EdgeKind::Augmented);
    out->goal_links = gr.count_edges(gsr::EdgeKind::GoalLink);
    out->degenerate_vertices = gr.degenerate_vertices();
    out->content_hash = gr.content_hash();
  });
}

gsr_status gsr_graph_config_get(const gsr_graph* g, gsr_graph_config* out) {
  GSR_REQUIRE(g && out);
  *out = to_c(g->graph.config());
  g_last_error.clear();
  return GSR_OK;
}

gsr_status gsr_graph_dataset(const gsr_graph* g, const gsr_dataset** out) {
  GSR_REQUIRE(g && out);
  *out = &g->dataset;
  g_last_error.clear();
  return GSR_OK;
}

void gsr_graph_free(gsr_graph* g) { delete g; }

gsr_status gsr_values_compute(const gsr_graph* g, gsr_values** out) {
  GSR_REQUIRE(g && out);
  *out = nullptr;
  return guarded([&] { *out = new gsr_values{gsr::compute_values(g->graph)}; });
}

gsr_status gsr_values_get(const gsr_values* v, size_t vertex, double* dist, double* q_tilde) {
  GSR_REQUIRE(v);
  if (vertex >= v->table.dist_to_goal.size()) return set_error(GSR_INVALID_ARGUMENT, "vertex out of range");
  if (dist != nullptr) *dist = v->table.dist_to_goal[vertex];
  if (q_tilde != nullptr) {
    *q_tilde = vertex < v->table.q_tilde.size() ? v->table.q_tilde[vertex] : gsr::kNegInfinity;
  }
  g_last_error.clear();
  return GSR_OK;
}

size_t gsr_values_count(const gsr_values* v) { return v == nullptr ? 0 : v->table.dist_to_goal.size(); }

gsr_status gsr_values_write_csv(const gsr_values* v, const char* path) {
  GSR_REQUIRE(v && path);
  return guarded([&] {
    std::string out = "vertex_id,dist,q_tilde\n";
    const auto& d = v->table.dist_to_goal;
    const auto& q = v->table.q_tilde;
    for (std::size_t i = 0; i < d.size(); ++i) {
      out += std::to_string(i) + ',' + gsr::format_double(d[i]) + ',' +
             gsr::format_double(i < q.size() ? q[i] : gsr::kNegInfinity) + '\n';
    }
    gsr::write_text_file(path, out);
  });
}

void gsr_values_free(gsr_values* v) { delete v; }

gsr_status gsr_weights_compute(const gsr_graph* g, const gsr_values* v, const gsr_reweight_config* cfg,
                               gsr_weights** out) {
  GSR_REQUIRE(g && v && cfg && out);
  *out = nullptr;
  return guarded([&] {
    gsr::WeightTable t = gsr::reallocate(g->graph, v->table, from_c(*cfg));
    auto w = std::make_unique<gsr_weights>();
    w->steps = std::move(t.step_weight);
    w->active_sources = t.active_sources;
    w->empty_sources = t.empty_sources;
    w->total_vertex_weight = t.total_vertex_weight();
    *out = w.release();
  });
}

gsr_status gsr_weights_tabular(const gsr_graph* g, int soft, gsr_weights** out) {
  GSR_REQUIRE(g && out);
  *out = nullptr;
  return guarded([&] {
    const gsr::TabularWeights t = gsr::tabular_weights(
        g->graph, g->dataset.ds, soft ? gsr::TabularMode::Soft : gsr::TabularMode::Hard);
    auto w = std::make_unique<gsr_weights>();
    w->steps = gsr::weights_to_steps(g->graph, t.weight);
    double total = 0.0;
    for (double x : t.weight) total += x;
    w->total_vertex_weight = total;
    *out = w.release();
  });
}

gsr_status gsr_weights_load_csv(const char* path, gsr_weights** out) {
  GSR_REQUIRE(path && out);
  *out = nullptr;
  return guarded([&] {
    auto w = std::make_unique<gsr_weights>();
    w->steps = gsr::parse_weights_csv(gsr::read_text_file(path));
    *out = w.release();
  });
}

gsr_status gsr_weights_write_csv(const gsr_weights* w, const char* path) {
  GSR_REQUIRE(w && path);
  return guarded([&] { gsr::write_text_file(path, gsr::weights_csv(w->steps)); });
}

gsr_status gsr_weights_info_get(const gsr_weights* w, gsr_weights_info* out) {
  GSR_REQUIRE(w && out);
  return guarded([&] {
    const gsr::WeightStats st = gsr::weight_stats(w->steps, "", 0.0, 0.0, 2);
    out->steps = st.count;
    out->active_sources = w->active_sources;
    out->empty_sources = w->empty_sources;
    out->total_vertex_weight = w->total_vertex_weight;
    out->min = st.min;
    out->max = st.max;
    out->mean = st.mean;
    out->contrast = st.contrast();
  });
}

gsr_status gsr_weights_step(const gsr_weights* w, size_t traj, size_t raw_index, double* out) {
  GSR_REQUIRE(w && out);
  if (traj >= w->steps.size() || raw_index >= w->steps[traj].size()) {
    return set_error(GSR_INVALID_ARGUMENT, "step index out of range");
  }
  *out = w->steps[traj][raw_index];
  g_last_error.clear();
  return GSR_OK;
}

gsr_status gsr_weights_extremes_json(const gsr_weights* w, size_t n, char** out) {
  GSR_REQUIRE(w && out);
  *out = nullptr;
  return guarded([&] {
    struct Entry {
      double w;
      std::size_t traj, step;
    };
    std::vector<Entry> all;
    for (std::size_t t = 0; t < w->steps.size(); ++t)
      for (std::size_t s = 0; s < w->steps[t].size(); ++s) all.push_back({w->steps[t][s], t, s});
    // Ties resolved by position so the log is deterministic.
    auto by_weight = [](const Entry& a, const Entry& b) {
      if (a.w != b.w) return a.w < b.w;
      return a.traj != b.traj ? a.traj < b.traj : a.step < b.step;
    };
    std::sort(all.begin(), all.end(), by_weight);
    const std::size_t m = std::min(n, all.size());
    auto row = [](const Entry& e) {
      return nlohmann::ordered_json{{"traj_id", e.traj}, {"raw_index", e.step}, {"weight", e.w}};
    };
    nlohmann::ordered_json j;
    j["lowest"] = nlohmann::ordered_json::array();
    j["highest"] = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < m; ++i) j["lowest"].push_back(row(all[i]));
    for (std::size_t i = 0; i < m; ++i) j["highest"].push_back(row(all[all.size() - 1 - i]));
    *out = dup_string(j.dump());
  });
}

void gsr_weights_free(gsr_weights* w) { delete w; }

gsr_status gsr_report_write(const gsr_weights* const* tables, const char* const* labels, const double* beta1,
                            const double* beta2, size_t n, gsr_report_format format, const char* path) {
  GSR_REQUIRE(tables && path);
  return guarded([&] {
    std::vector<gsr::WeightStats> stats;
    for (std::size_t i = 0; i < n; ++i) {
      if (tables[i] == nullptr) gsr::fail(gsr::ErrorCode::InvalidConfig, "null weight table in report");
      const std::string label = labels != nullptr && labels[i] != nullptr ? labels[i] : "run" + std::to_string(i);
      const double b1 = beta1 != nullptr ? beta1[i] : std::numeric_limits<double>::quiet_NaN();
      const double b2 = beta2 != nullptr ? beta2[i] : std::numeric_limits<double>::quiet_NaN();
      stats.push_back(gsr::weight_stats(tables[i]->steps, label, b1, b2));
    }
    std::string text;
    switch (format) {
      case GSR_REPORT_HTML: text = gsr::report_html(stats); break;
      case GSR_REPORT_SUMMARY_CSV: text = gsr::report_summary_csv(stats); break;
      case GSR_REPORT_CDF_CSV: text = gsr::report_cdf_csv(stats); break;
      default: gsr::fail(gsr::ErrorCode::InvalidConfig, "unknown report format");
    }
    gsr::write_text_file(path, text);
  });
}

gsr_status gsr_bench_config_default(const char* scenario, gsr_bench_config* out) {
  GSR_REQUIRE(scenario && out);
  gsr::bench::Scenario s;
  const char* demos = nullptr;
  if (std::strcmp(scenario, "standard") == 0) {
    s = gsr::bench::standard_scenario();
    demos = "retry:25,detour:10,optimal:15";
  } else if (std::strcmp(scenario, "sweep") == 0) {
    s = gsr::bench::sweep_scenario();
    demos = "retry:25,detour:10,optimal:15";
  } else if (std::strcmp(scenario, "retry") == 0) {
    s = gsr::bench::retry_scenario();
    demos = "retry:50";
  } else {
    return set_error(GSR_INVALID_CONFIG, std::string("unknown scenario '") + scenario + "'");
  }
  out->env = "grid10";
  out->demos = demos;
  out->eval_trials = s.eval_trials;
  out->eval_horizon = s.eval_horizon;
  out->reference_episodes = s.reference_episodes;
  out->k_policy = s.k_policy;
  out->proj_dim = s.embed.proj_dim;
  out->noise_sigma = s.embed.noise_sigma;
  out->embed_seed = s.embed.seed;
  out->graph = to_c(s.graph);
  out->reweight = to_c(s.reweight);
  g_last_error.clear();
  return GSR_OK;
}

gsr_status gsr_bench_run(const gsr_bench_config* cfg, uint64_t seed, int evaluate_uniform, gsr_bench_result** out) {
  GSR_REQUIRE(cfg && out);
  *out = nullptr;
  return guarded([&] {
    *out = new gsr_bench_result{gsr::bench::run_scenario(scenario_from(*cfg), seed, evaluate_uniform != 0)};
  });
}

gsr_status gsr_bench_summary_get(const gsr_bench_result* r, gsr_bench_summary* out) {
  GSR_REQUIRE(r && out);
  const auto& res = r->result;
  out->seed = res.seed;
  out->gsr = to_c(res.gsr);
  out->uniform = to_c(res.uniform);
  out->vertices = res.vertices;
  out->augmented_edges = res.augmented_edges;
  out->sources = res.sources;
  out->total_weight = res.total_weight;
  out->contrast = res.stats.contrast();
  g_last_error.clear();
  return GSR_OK;
}

gsr_status gsr_bench_write_episodes(const gsr_bench_result* r, int which, const char* path) {
  GSR_REQUIRE(r && path);
  if (which != 0 && which != 1) return set_error(GSR_INVALID_ARGUMENT, "which must be 0 or 1");
  return guarded([&] {
    const auto& m = which == 0 ? r->result.gsr : r->result.uniform;
    gsr::write_text_file(path, gsr::bench::episodes_jsonl(m.episodes));
  });
}

void gsr_bench_result_free(gsr_bench_result* r) { delete r; }

gsr_status gsr_bench_generate(const gsr_bench_config* cfg, uint64_t seed, gsr_dataset** out) {
  GSR_REQUIRE(cfg && out);
  *out = nullptr;
  return guarded([&] {
    const gsr::bench::Scenario s = scenario_from(*cfg);
    const gsr::bench::GridWorld env = gsr::bench::make_env(s.env);
    const gsr::bench::Embedder embedder(env, s.embed);
    *out = new gsr_dataset{gsr::bench::generate_demos(env, s.demos, embedder, seed).dataset};
  });
}

gsr_status gsr_synthetic_dataset(size_t total_steps, size_t dim, size_t steps_per_traj, uint64_t seed,
                                 gsr_dataset** out) {
  GSR_REQUIRE(out);
  *out = nullptr;
  return guarded([&] { *out = new gsr_dataset{gsr::bench::make_perf_dataset(total_steps, dim, steps_per_traj, seed)}; });
}

gsr_status gsr_bench_sweep(const gsr_bench_config* cfg, const double* beta1, size_t n_beta1, const double* beta2,
                           size_t n_beta2, const double* alpha, size_t n_alpha, const uint64_t* seeds,
                           size_t n_seeds, gsr_sweep** out) {
  GSR_REQUIRE(cfg && out);
  *out = nullptr;
  GSR_REQUIRE((beta1 || n_beta1 == 0) && (beta2 || n_beta2 == 0) && (alpha || n_alpha == 0) &&
              (seeds || n_seeds == 0));
  return guarded([&] {
    gsr::bench::SweepGrid grid;
    grid.beta1.assign(beta1, beta1 + n_beta1);
    grid.beta2.assign(beta2, beta2 + n_beta2);
    grid.alpha.assign(alpha, alpha + n_alpha);
    const std::vector<std::uint64_t> s(seeds, seeds + n_seeds);
    *out = new gsr_sweep{gsr::bench::run_sweep(scenario_from(*cfg), grid, s)};
  });
}

size_t gsr_sweep_rows(const gsr_sweep* s) { return s == nullptr ? 0 : s->rows.size(); }

gsr_status gsr_sweep_write_csv(const gsr_sweep* s, int summary, const char* path) {
  GSR_REQUIRE(s && path);
  return guarded([&] {
    gsr::write_text_file(path, summary ? gsr::bench::sweep_summary_csv(s->rows) : gsr::bench::sweep_csv(s->rows));
  });
}

void gsr_sweep_free(gsr_sweep* s) { delete s; }

}  // extern "C"
