// gsr command-line driver. Talks to the engine only through the C API.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "gsr/gsr.h"
#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 2;
constexpr int kExitIo = 3;
constexpr int kExitInvariant = 4;

struct Failure {
  int exit_code;
  std::string message;
};

int exit_code_for(gsr_status s) {
  switch (s) {
    case GSR_OK: return kExitOk;
    case GSR_IO_FAILURE: return kExitIo;
    case GSR_INVARIANT_VIOLATION:
    case GSR_INTERNAL: return kExitInvariant;
    default: return kExitValidation;
  }
}

void check(gsr_status s) {
  if (s != GSR_OK) {
    throw Failure{exit_code_for(s), std::string(gsr_status_name(s)) + ": " + gsr_last_error()};
  }
}

[[noreturn]] void usage_error(const std::string& message) { throw Failure{kExitValidation, message}; }

template <typename T, void (*Free)(T*)>
struct Deleter {
  void operator()(T* p) const { Free(p); }
};
using Dataset = std::unique_ptr<gsr_dataset, Deleter<gsr_dataset, gsr_dataset_free>>;
using Graph = std::unique_ptr<gsr_graph, Deleter<gsr_graph, gsr_graph_free>>;
using Values = std::unique_ptr<gsr_values, Deleter<gsr_values, gsr_values_free>>;
using Weights = std::unique_ptr<gsr_weights, Deleter<gsr_weights, gsr_weights_free>>;
using BenchResult = std::unique_ptr<gsr_bench_result, Deleter<gsr_bench_result, gsr_bench_result_free>>;
using Sweep = std::unique_ptr<gsr_sweep, Deleter<gsr_sweep, gsr_sweep_free>>;

std::string take_string(char* s) {
  std::string out = s == nullptr ? "" : s;
  gsr_string_free(s);
  return out;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

ordered_json number_or_null(double v) { return std::isfinite(v) ? ordered_json(v) : ordered_json(nullptr); }

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
  if (!out) throw Failure{kExitIo, "cannot write " + path.string()};
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Failure{kExitIo, "cannot open " + path.string()};
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void make_dirs(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw Failure{kExitIo, "cannot create directory " + dir.string()};
}

// Log lines go to stderr so stdout stays machine-readable.
struct Log {
  int verbosity = 1;
  void info(const std::string& s) const {
    if (verbosity >= 1) std::cerr << s << '\n';
  }
  void debug(const std::string& s) const {
    if (verbosity >= 2) std::cerr << s << '\n';
  }
};

class Timer {
 public:
  double lap() {
    const auto now = std::chrono::steady_clock::now();
    const double s = std::chrono::duration<double>(now - last_).count();
    last_ = now;
    return s;
  }

 private:
  std::chrono::steady_clock::time_point last_ = std::chrono::steady_clock::now();
};

// Graph and reweighting flags, with optional presets. Explicit flags win
// over the preset.
struct EngineOptions {
  std::string preset;
  std::optional<std::size_t> stride, tol_neighbors, k;
  std::optional<double> alpha, edge_weight, tol_eps, beta1, beta2;
  bool bc = false;
  bool exclude_same = false;

  void add_graph(CLI::App* app) {
    app->add_option("--stride", stride, "Keep every n-th observation as a vertex")->check(CLI::PositiveNumber);
    app->add_option("--alpha", alpha, "Connectivity scale on the tolerance")->check(CLI::NonNegativeNumber);
    app->add_option("--tol-neighbors", tol_neighbors, "Tolerance smoothing neighborhood (self included)")
        ->check(CLI::PositiveNumber);
    app->add_option("--edge-weight", edge_weight, "Weight of augmented edges");
    app->add_option("--tol-eps", tol_eps, "Floor on |Tol|");
  }
  void add_reweight(CLI::App* app) {
    app->add_option("--beta1", beta1, "Similarity temperature");
    app->add_option("--beta2", beta2, "Value temperature");
    app->add_option("--k", k, "Retrieved neighbors per source");
    app->add_flag("--bc", bc, "Behavior cloning limit: every step keeps weight 1");
    app->add_flag("--exclude-same-trajectory", exclude_same, "Drop candidates from the source trajectory");
  }
  void add_preset(CLI::App* app) {
    app->add_option("--preset", preset, std::string("Task preset: ") + gsr_preset_names());
  }

  void apply(gsr_graph_config& g, gsr_reweight_config& r) const {
    if (!preset.empty()) check(gsr_apply_preset(preset.c_str(), &g, &r));
    if (stride) g.stride = *stride;
    if (tol_neighbors) g.tol_neighbors = *tol_neighbors;
    if (alpha) g.alpha = *alpha;
    if (edge_weight) g.augmented_edge_weight = *edge_weight;
    if (tol_eps) g.tol_floor_eps = *tol_eps;
    if (beta1) r.beta1 = *beta1;
    if (beta2) r.beta2 = *beta2;
    if (k) r.k_retrieve = *k;
    if (bc) r.bc_mode = 1;
    if (exclude_same) r.exclude_same_trajectory = 1;
  }
  gsr_graph_config graph() const {
    gsr_graph_config g;
    gsr_reweight_config r;
    gsr_graph_config_default(&g);
    gsr_reweight_config_default(&r);
    apply(g, r);
    return g;
  }
  gsr_reweight_config reweight() const {
    gsr_graph_config g;
    gsr_reweight_config r;
    gsr_graph_config_default(&g);
    gsr_reweight_config_default(&r);
    apply(g, r);
    return r;
  }
};

ordered_json graph_config_json(const gsr_graph_config& g) {
  return {{"stride", g.stride},
          {"tol_neighbors", g.tol_neighbors},
          {"alpha", g.alpha},
          {"augmented_edge_weight", g.augmented_edge_weight},
          {"tol_floor_eps", g.tol_floor_eps}};
}

ordered_json reweight_config_json(const gsr_reweight_config& r) {
  return {{"k_retrieve", r.k_retrieve},
          {"beta1", r.beta1},
          {"beta2", r.beta2},
          {"bc_mode", r.bc_mode != 0},
          {"exclude_same_trajectory", r.exclude_same_trajectory != 0}};
}

gsr_graph_config graph_config_from(const ordered_json& j) {
  gsr_graph_config g;
  g.stride = j.at("stride").get<std::size_t>();
  g.tol_neighbors = j.at("tol_neighbors").get<std::size_t>();
  g.alpha = j.at("alpha").get<double>();
  g.augmented_edge_weight = j.at("augmented_edge_weight").get<double>();
  g.tol_floor_eps = j.at("tol_floor_eps").get<double>();
  return g;
}

gsr_reweight_config reweight_config_from(const ordered_json& j) {
  gsr_reweight_config r;
  r.k_retrieve = j.at("k_retrieve").get<std::size_t>();
  r.beta1 = j.at("beta1").get<double>();
  r.beta2 = j.at("beta2").get<double>();
  r.bc_mode = j.at("bc_mode").get<bool>() ? 1 : 0;
  r.exclude_same_trajectory = j.at("exclude_same_trajectory").get<bool>() ? 1 : 0;
  return r;
}

ordered_json weights_json(const gsr_weights* w) {
  gsr_weights_info info;
  check(gsr_weights_info_get(w, &info));
  return {{"steps", info.steps},
          {"active_sources", info.active_sources},
          {"empty_sources", info.empty_sources},
          {"total_vertex_weight", number_or_null(info.total_vertex_weight)},
          {"min", info.min},
          {"max", info.max},
          {"mean", info.mean},
          {"contrast", info.contrast}};
}

Dataset load_dataset(const std::string& path, bool allow_failures) {
  gsr_dataset* ds = nullptr;
  check(gsr_dataset_load(path.c_str(), allow_failures ? 1 : 0, &ds));
  return Dataset(ds);
}

Graph import_graph(const std::string& dir) {
  gsr_graph* g = nullptr;
  check(gsr_graph_import(dir.c_str(), &g));
  return Graph(g);
}

Values compute_values(const gsr_graph* g) {
  gsr_values* v = nullptr;
  check(gsr_values_compute(g, &v));
  return Values(v);
}

Weights compute_weights(const gsr_graph* g, const gsr_values* v, const gsr_reweight_config& cfg) {
  gsr_weights* w = nullptr;
  check(gsr_weights_compute(g, v, &cfg, &w));
  return Weights(w);
}

std::string extremes_json(const gsr_weights* w, std::size_t n) {
  char* s = nullptr;
  check(gsr_weights_extremes_json(w, n, &s));
  return take_string(s);
}

// ---- ingest ---------------------------------------------------------------

struct IngestArgs {
  std::vector<std::string> inputs;
  std::string out;
  bool allow_failures = false;
  std::size_t synthetic = 0, dim = 64, traj_len = 200;
  std::uint64_t seed = 1;
};

int run_ingest(const IngestArgs& a, const Log& log) {
  if (a.inputs.empty() == (a.synthetic == 0)) usage_error("ingest needs either --input or --synthetic");
  std::vector<Dataset> parts;
  if (a.synthetic > 0) {
    gsr_dataset* raw = nullptr;
    check(gsr_synthetic_dataset(a.synthetic, a.dim, a.traj_len, a.seed, &raw));
    parts.emplace_back(raw);
  }
  for (const auto& in : a.inputs) parts.push_back(load_dataset(in, a.allow_failures));
  Dataset ds;
  if (parts.size() == 1) {
    ds = std::move(parts[0]);
  } else {
    std::vector<const gsr_dataset*> raw;
    for (const auto& p : parts) raw.push_back(p.get());
    gsr_dataset* merged = nullptr;
    check(gsr_dataset_concat(raw.data(), raw.size(), &merged));
    ds.reset(merged);
  }
  gsr_dataset_info info;
  check(gsr_dataset_info_get(ds.get(), &info));
  if (!a.out.empty()) {
    check(gsr_dataset_save(ds.get(), a.out.c_str()));
    log.info("wrote " + a.out);
  }
  const ordered_json j{{"trajectories", info.trajectories}, {"total_steps", info.total_steps},
                       {"embedding_dim", info.embedding_dim}, {"action_dim", info.action_dim},
                       {"failures", info.failures}, {"fingerprint", hex64(info.fingerprint)}};
  std::cout << j.dump(2) << '\n';
  return kExitOk;
}

// ---- build-graph ----------------------------------------------------------

struct BuildArgs {
  std::string input, out;
  bool allow_failures = false;
  EngineOptions engine;
};

ordered_json graph_json(const gsr_graph* g) {
  gsr_graph_info gi;
  check(gsr_graph_info_get(g, &gi));
  return {{"vertices", gi.vertices},
          {"edges", gi.dataset_edges + gi.augmented_edges + gi.goal_links},
          {"dataset_edges", gi.dataset_edges},
          {"augmented_edges", gi.augmented_edges},
          {"goal_links", gi.goal_links},
          {"degenerate_vertices", gi.degenerate_vertices},
          {"content_hash", hex64(gi.content_hash)}};
}

int run_build(const BuildArgs& a, const Log& log) {
  const Dataset ds = load_dataset(a.input, a.allow_failures);
  const gsr_graph_config cfg = a.engine.graph();
  gsr_graph* raw = nullptr;
  check(gsr_graph_build(ds.get(), &cfg, &raw));
  const Graph g(raw);
  check(gsr_graph_export(g.get(), a.out.c_str(), a.input.c_str()));
  log.info("wrote graph to " + a.out);
  std::cout << graph_json(g.get()).dump(2) << '\n';
  return kExitOk;
}

// ---- values ---------------------------------------------------------------

struct ValuesArgs {
  std::string graph, out;
};

int run_values(const ValuesArgs& a, const Log& log) {
  const Graph g = import_graph(a.graph);
  const Values v = compute_values(g.get());
  check(gsr_values_write_csv(v.get(), a.out.c_str()));
  std::size_t reachable = 0;
  for (std::size_t i = 0; i < gsr_values_count(v.get()); ++i) {
    double d = 0;
    check(gsr_values_get(v.get(), i, &d, nullptr));
    if (std::isfinite(d)) ++reachable;
  }
  log.info("wrote " + a.out + " (" + std::to_string(reachable) + "/" + std::to_string(gsr_values_count(v.get())) +
           " vertices reach the goal)");
  return kExitOk;
}

// ---- weigh ----------------------------------------------------------------

struct WeighArgs {
  std::string graph, out, tabular;
  std::size_t log_extremes = 5;
  EngineOptions engine;
};

int run_weigh(const WeighArgs& a, const Log& log) {
  const Graph g = import_graph(a.graph);
  Weights w;
  if (!a.tabular.empty()) {
    if (a.tabular != "hard" && a.tabular != "soft") usage_error("--tabular must be hard or soft");
    gsr_weights* raw = nullptr;
    check(gsr_weights_tabular(g.get(), a.tabular == "soft" ? 1 : 0, &raw));
    w.reset(raw);
  } else {
    gsr_graph_config gcfg;
    check(gsr_graph_config_get(g.get(), &gcfg));
    gsr_reweight_config r;
    gsr_reweight_config_default(&r);
    a.engine.apply(gcfg, r);
    const Values v = compute_values(g.get());
    w = compute_weights(g.get(), v.get(), r);
  }
  check(gsr_weights_write_csv(w.get(), a.out.c_str()));
  log.info("wrote " + a.out);
  log.info("weight extremes: " + extremes_json(w.get(), a.log_extremes));
  std::cout << weights_json(w.get()).dump(2) << '\n';
  return kExitOk;
}

// ---- report ---------------------------------------------------------------

struct ReportArgs {
  std::vector<std::string> weights, labels;
  std::vector<double> beta1, beta2;
  std::string out;
  bool cdf = false;
};

int run_report(const ReportArgs& a, const Log& log) {
  const std::size_t n = a.weights.size();
  if (!a.labels.empty() && a.labels.size() != n) usage_error("--label must be given once per weights file");
  if (!a.beta1.empty() && a.beta1.size() != n) usage_error("--beta1 must be given once per weights file");
  if (!a.beta2.empty() && a.beta2.size() != n) usage_error("--beta2 must be given once per weights file");
  std::vector<Weights> tables;
  std::vector<const gsr_weights*> raw;
  std::vector<std::string> labels;
  for (std::size_t i = 0; i < n; ++i) {
    gsr_weights* w = nullptr;
    check(gsr_weights_load_csv(a.weights[i].c_str(), &w));
    tables.emplace_back(w);
    raw.push_back(w);
    labels.push_back(a.labels.empty() ? fs::path(a.weights[i]).stem().string() : a.labels[i]);
  }
  std::vector<const char*> label_ptrs;
  for (const auto& l : labels) label_ptrs.push_back(l.c_str());
  const std::string ext = fs::path(a.out).extension().string();
  gsr_report_format fmt;
  if (ext == ".html" || ext == ".htm") {
    fmt = GSR_REPORT_HTML;
  } else if (ext == ".csv") {
    fmt = a.cdf ? GSR_REPORT_CDF_CSV : GSR_REPORT_SUMMARY_CSV;
  } else {
    usage_error("--out must end in .html or .csv");
  }
  check(gsr_report_write(raw.data(), label_ptrs.data(), a.beta1.empty() ? nullptr : a.beta1.data(),
                         a.beta2.empty() ? nullptr : a.beta2.data(), n, fmt, a.out.c_str()));
  log.info("wrote " + a.out);
  return kExitOk;
}

// ---- bench / sweep ----------------------------------------------------------

struct BenchOptions {
  std::string scenario = "standard";
  std::optional<std::string> env, demos;
  std::optional<std::size_t> trials, horizon, k_policy, proj_dim, reference;
  std::optional<double> noise;
  EngineOptions engine;

  void add(CLI::App* app) {
    app->add_option("--scenario", scenario, "Base scenario: standard, sweep or retry");
    app->add_option("--env", env, "Environment: grid10, open10, grid6");
    app->add_option("--demos", demos, "Demonstrator mix, e.g. retry:35,detour:15,optimal:15");
    app->add_option("--trials", trials, "Evaluation rollouts per policy")->check(CLI::PositiveNumber);
    app->add_option("--horizon", horizon, "Rollout step budget (0: environment horizon)");
    app->add_option("--k-policy", k_policy, "Neighbors voting in the policy")->check(CLI::PositiveNumber);
    app->add_option("--proj-dim", proj_dim, "Random projection dimension (0: raw coordinates)");
    app->add_option("--noise", noise, "Embedding noise sigma")->check(CLI::NonNegativeNumber);
    app->add_option("--reference-episodes", reference, "Episodes per profile for the TTS reference")
        ->check(CLI::PositiveNumber);
    engine.add_preset(app);
    engine.add_graph(app);
    engine.add_reweight(app);
  }

  gsr_bench_config config() const {
    gsr_bench_config c;
    check(gsr_bench_config_default(scenario.c_str(), &c));
    if (env) c.env = env->c_str();
    if (demos) c.demos = demos->c_str();
    if (trials) c.eval_trials = *trials;
    if (horizon) c.eval_horizon = *horizon;
    if (k_policy) c.k_policy = *k_policy;
    if (proj_dim) c.proj_dim = *proj_dim;
    if (noise) c.noise_sigma = *noise;
    if (reference) c.reference_episodes = *reference;
    engine.apply(c.graph, c.reweight);
    return c;
  }
};

ordered_json bench_config_json(const gsr_bench_config& c) {
  return {{"env", c.env},
          {"demos", c.demos},
          {"eval_trials", c.eval_trials},
          {"eval_horizon", c.eval_horizon},
          {"reference_episodes", c.reference_episodes},
          {"k_policy", c.k_policy},
          {"proj_dim", c.proj_dim},
          {"noise_sigma", c.noise_sigma},
          {"graph", graph_config_json(c.graph)},
          {"reweight", reweight_config_json(c.reweight)}};
}

ordered_json metrics_json(const gsr_bench_metrics& m) {
  return {{"trials", m.trials},
          {"success_rate", m.success_rate},
          {"tts_mean", number_or_null(m.tts_mean)},
          {"tts_std", number_or_null(m.tts_std)},
          {"np", number_or_null(m.np)}};
}

struct BenchArgs {
  BenchOptions opts;
  std::vector<std::uint64_t> seeds{1};
  std::string out;
};

int run_bench(const BenchArgs& a, const Log& log) {
  const gsr_bench_config cfg = a.opts.config();
  make_dirs(a.out);
  ordered_json runs = ordered_json::array();
  std::string csv = "seed,policy,trials,sr,tts_mean,tts_std,np\n";
  auto csv_num = [](double v) { return std::isfinite(v) ? std::to_string(v) : std::string(); };
  double sr_g = 0, sr_u = 0, tts_g = 0, tts_u = 0;
  std::size_t n_tts = 0;
  for (const std::uint64_t seed : a.seeds) {
    Timer t;
    gsr_bench_result* raw = nullptr;
    check(gsr_bench_run(&cfg, seed, 1, &raw));
    const BenchResult r(raw);
    gsr_bench_summary s;
    check(gsr_bench_summary_get(r.get(), &s));
    const std::string tag = std::to_string(seed);
    check(gsr_bench_write_episodes(r.get(), 0, (fs::path(a.out) / ("episodes_gsr_seed" + tag + ".jsonl")).c_str()));
    check(gsr_bench_write_episodes(r.get(), 1, (fs::path(a.out) / ("episodes_uniform_seed" + tag + ".jsonl")).c_str()));
    gsr_dataset* demos = nullptr;
    check(gsr_bench_generate(&cfg, seed, &demos));
    const Dataset demo_ds(demos);
    check(gsr_dataset_save(demo_ds.get(), (fs::path(a.out) / ("demos_seed" + tag + ".gsrd")).c_str()));
    runs.push_back({{"seed", seed},
                    {"gsr", metrics_json(s.gsr)},
                    {"uniform", metrics_json(s.uniform)},
                    {"vertices", s.vertices},
                    {"augmented_edges", s.augmented_edges},
                    {"sources", s.sources},
                    {"total_weight", s.total_weight},
                    {"contrast", s.contrast},
                    {"seconds", t.lap()}});
    for (const auto& [name, m] : {std::pair{"gsr", s.gsr}, std::pair{"uniform", s.uniform}}) {
      csv += tag + ',' + name + ',' + std::to_string(m.trials) + ',' + std::to_string(m.success_rate) + ',' +
             csv_num(m.tts_mean) + ',' + csv_num(m.tts_std) + ',' + csv_num(m.np) + '\n';
    }
    sr_g += s.gsr.success_rate;
    sr_u += s.uniform.success_rate;
    if (std::isfinite(s.gsr.tts_mean) && std::isfinite(s.uniform.tts_mean)) {
      tts_g += s.gsr.tts_mean;
      tts_u += s.uniform.tts_mean;
      ++n_tts;
    }
    log.info("seed " + tag + ": gsr SR " + std::to_string(s.gsr.success_rate) + " TTS " + csv_num(s.gsr.tts_mean) +
             " | uniform SR " + std::to_string(s.uniform.success_rate) + " TTS " + csv_num(s.uniform.tts_mean));
  }
  const double n = static_cast<double>(a.seeds.size());
  ordered_json summary{{"config", bench_config_json(cfg)},
                       {"runs", runs},
                       {"mean", {{"gsr_sr", sr_g / n},
                                 {"uniform_sr", sr_u / n},
                                 {"gsr_tts", n_tts ? ordered_json(tts_g / n_tts) : ordered_json(nullptr)},
                                 {"uniform_tts", n_tts ? ordered_json(tts_u / n_tts) : ordered_json(nullptr)}}}};
  write_file(fs::path(a.out) / "summary.json", summary.dump(2) + "\n");
  write_file(fs::path(a.out) / "summary.csv", csv);
  std::cout << summary["mean"].dump(2) << '\n';
  return kExitOk;
}

struct SweepArgs {
  BenchOptions opts;
  std::vector<std::string> grid;
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  std::string out, summary_out;
};

std::vector<double> parse_list(const std::string& key, const std::string& list) {
  std::vector<double> out;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      usage_error("bad value '" + item + "' for " + key);
    }
  }
  if (out.empty()) usage_error("empty list for " + key);
  return out;
}

int run_sweep(SweepArgs a, const Log& log) {
  if (a.opts.scenario == "standard" && !a.opts.horizon) a.opts.scenario = "sweep";
  const gsr_bench_config cfg = a.opts.config();
  std::map<std::string, std::vector<double>> axes{{"beta1", {cfg.reweight.beta1}},
                                                  {"beta2", {cfg.reweight.beta2}},
                                                  {"alpha", {cfg.graph.alpha}}};
  for (const auto& item : a.grid) {
    const auto eq = item.find('=');
    const std::string key = item.substr(0, eq);
    if (eq == std::string::npos || !axes.count(key)) usage_error("grid entries look like beta1=0.5,1,2");
    axes[key] = parse_list(key, item.substr(eq + 1));
  }
  gsr_sweep* raw = nullptr;
  Timer t;
  check(gsr_bench_sweep(&cfg, axes["beta1"].data(), axes["beta1"].size(), axes["beta2"].data(),
                        axes["beta2"].size(), axes["alpha"].data(), axes["alpha"].size(), a.seeds.data(),
                        a.seeds.size(), &raw));
  const Sweep s(raw);
  check(gsr_sweep_write_csv(s.get(), 0, a.out.c_str()));
  std::string summary = a.summary_out;
  if (summary.empty()) {
    fs::path p(a.out);
    summary = (p.parent_path() / (p.stem().string() + "_summary" + p.extension().string())).string();
  }
  check(gsr_sweep_write_csv(s.get(), 1, summary.c_str()));
  log.info("wrote " + a.out + " and " + summary + " (" + std::to_string(gsr_sweep_rows(s.get())) + " runs, " +
           std::to_string(t.lap()) + " s)");
  return kExitOk;
}

// ---- pipeline ---------------------------------------------------------------

struct PipelineArgs {
  std::string input, out, replay;
  bool allow_failures = false;
  std::size_t log_extremes = 10;
  EngineOptions engine;
};

struct PipelineConfig {
  std::string input;
  bool allow_failures = false;
  gsr_graph_config graph;
  gsr_reweight_config reweight;

  ordered_json json() const {
    return {{"input", input},
            {"allow_failures", allow_failures},
            {"graph", graph_config_json(graph)},
            {"reweight", reweight_config_json(reweight)}};
  }
};

ordered_json run_pipeline_stages(const PipelineConfig& pc, const fs::path& out, std::size_t n_extremes,
                                 const Log& log) {
  make_dirs(out);
  const ordered_json config = pc.json();
  const std::string config_text = config.dump();
  ordered_json stages = ordered_json::array();
  Timer t;
  auto stage = [&](const char* name) {
    const double s = t.lap();
    stages.push_back({{"stage", name}, {"seconds", s}});
    log.debug(std::string(name) + ": " + std::to_string(s) + " s");
  };

  const Dataset ds = load_dataset(pc.input, pc.allow_failures);
  gsr_dataset_info di;
  check(gsr_dataset_info_get(ds.get(), &di));
  stage("load");
  gsr_graph* graw = nullptr;
  check(gsr_graph_build(ds.get(), &pc.graph, &graw));
  const Graph g(graw);
  stage("graph");
  const Values v = compute_values(g.get());
  stage("values");
  const Weights w = compute_weights(g.get(), v.get(), pc.reweight);
  stage("weigh");

  const fs::path graph_dir = out / "graph";
  check(gsr_graph_export(g.get(), graph_dir.c_str(), pc.input.c_str()));
  check(gsr_values_write_csv(v.get(), (out / "values.csv").c_str()));
  check(gsr_weights_write_csv(w.get(), (out / "weights.csv").c_str()));
  stage("write");

  ordered_json outputs;
  for (const char* rel : {"values.csv", "weights.csv", "graph/edges.txt", "graph/vertices.csv"}) {
    std::uint64_t h = 0;
    check(gsr_hash_file((out / rel).c_str(), &h));
    outputs[rel] = hex64(h);
  }
  const ordered_json gj = graph_json(g.get());
  ordered_json manifest{
      {"tool", "gsr"},
      {"version", gsr_version()},
      {"config", config},
      {"config_hash", hex64(gsr_fnv1a64(config_text.data(), config_text.size()))},
      {"dataset", {{"fingerprint", hex64(di.fingerprint)},
                   {"trajectories", di.trajectories},
                   {"total_steps", di.total_steps},
                   {"embedding_dim", di.embedding_dim}}},
      {"graph", gj},
      {"weights", weights_json(w.get())},
      {"weight_extremes", ordered_json::parse(extremes_json(w.get(), n_extremes))},
      {"outputs", outputs},
      {"threads", gsr_get_threads()},
      {"stages", stages},
  };
  log.info("|V| = " + std::to_string(gj["vertices"].get<std::size_t>()) +
           ", |E| = " + std::to_string(gj["edges"].get<std::size_t>()));
  log.info("weight extremes: " + manifest["weight_extremes"].dump());
  return manifest;
}

int run_pipeline(const PipelineArgs& a, const Log& log) {
  PipelineConfig pc;
  std::optional<ordered_json> recorded;
  if (!a.replay.empty()) {
    try {
      recorded = ordered_json::parse(read_file(a.replay));
      const auto& c = recorded->at("config");
      pc.input = c.at("input").get<std::string>();
      pc.allow_failures = c.at("allow_failures").get<bool>();
      pc.graph = graph_config_from(c.at("graph"));
      pc.reweight = reweight_config_from(c.at("reweight"));
    } catch (const nlohmann::json::exception& e) {
      usage_error("cannot read manifest " + a.replay + ": " + e.what());
    }
    if (!a.input.empty() && a.input != pc.input) usage_error("--input conflicts with the replayed manifest");
  } else {
    if (a.input.empty()) usage_error("pipeline needs --input or --replay");
    pc.input = fs::absolute(a.input).lexically_normal().string();
    pc.allow_failures = a.allow_failures;
    pc.graph = a.engine.graph();
    pc.reweight = a.engine.reweight();
  }

  const ordered_json manifest = run_pipeline_stages(pc, a.out, a.log_extremes, log);
  write_file(fs::path(a.out) / "manifest.json", manifest.dump(2) + "\n");
  log.info("wrote " + (fs::path(a.out) / "manifest.json").string());

  if (recorded) {
    bool same = recorded->value("config_hash", "") == manifest["config_hash"];
    for (const auto& [name, hash] : manifest["outputs"].items()) {
      const bool match = recorded->at("outputs").value(name, "") == hash.get<std::string>();
      log.info(std::string(match ? "identical: " : "DIFFERS:   ") + name);
      same = same && match;
    }
    if (!same) {
      std::cerr << "replay produced different outputs\n";
      return kExitInvariant;
    }
    std::cout << "replay matches " << a.replay << '\n';
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"gsr: graph search and retrieval reweighting of demonstration datasets"};
  app.require_subcommand(1);
  app.fallthrough();
  std::optional<std::size_t> threads;
  int verbose = 0;
  bool quiet = false;
  app.add_option("--threads", threads, "Worker threads (default: GSR_THREADS or all cores)");
  app.add_flag("-v,--verbose", verbose, "More logging (repeat for stage timings)");
  app.add_flag("-q,--quiet", quiet, "Only errors on stderr");
  app.set_version_flag("--version", gsr_version());

  IngestArgs ingest;
  auto* c_ingest = app.add_subcommand("ingest", "Validate (and optionally convert or concatenate) datasets");
  c_ingest->add_option("--input", ingest.inputs, "Dataset file(s); several are concatenated per step");
  c_ingest->add_option("--synthetic", ingest.synthetic, "Generate a synthetic dataset with this many steps instead");
  c_ingest->add_option("--dim", ingest.dim, "Synthetic embedding dimension")->check(CLI::PositiveNumber);
  c_ingest->add_option("--traj-len", ingest.traj_len, "Synthetic steps per trajectory");
  c_ingest->add_option("--seed", ingest.seed, "Synthetic seed");
  c_ingest->add_option("--out", ingest.out, "Write the validated dataset (.gsrd or .jsonl)");
  c_ingest->add_flag("--allow-failures", ingest.allow_failures, "Accept failure trajectories");

  BuildArgs build;
  auto* c_build = app.add_subcommand("build-graph", "Build and export the demonstration graph");
  c_build->add_option("--input", build.input, "Dataset file")->required();
  c_build->add_option("--out", build.out, "Output directory")->required();
  c_build->add_flag("--allow-failures", build.allow_failures, "Accept failure trajectories");
  build.engine.add_preset(c_build);
  build.engine.add_graph(c_build);

  ValuesArgs values;
  auto* c_values = app.add_subcommand("values", "Shortest-path values of an exported graph");
  c_values->add_option("--graph", values.graph, "Graph directory")->required();
  c_values->add_option("--out", values.out, "values.csv")->required();

  WeighArgs weigh;
  auto* c_weigh = app.add_subcommand("weigh", "Retrieval reweighting of an exported graph");
  c_weigh->add_option("--graph", weigh.graph, "Graph directory")->required();
  c_weigh->add_option("--out", weigh.out, "weights.csv")->required();
  c_weigh->add_option("--tabular", weigh.tabular, "Exact-state reweighting instead: hard or soft");
  c_weigh->add_option("--log-extremes", weigh.log_extremes, "Extreme weights to log");
  weigh.engine.add_preset(c_weigh);
  weigh.engine.add_reweight(c_weigh);

  ReportArgs report;
  auto* c_report = app.add_subcommand("report", "Weight CDF report over one or more weight tables");
  c_report->add_option("--weights", report.weights, "weights.csv files")->required();
  c_report->add_option("--label", report.labels, "One label per table");
  c_report->add_option("--beta1", report.beta1, "beta1 per table");
  c_report->add_option("--beta2", report.beta2, "beta2 per table");
  c_report->add_option("--out", report.out, "report.html or report.csv")->required();
  c_report->add_flag("--cdf", report.cdf, "CSV output holds the long-format CDF instead of the summary");

  BenchArgs bench;
  auto* c_bench = app.add_subcommand("bench", "Gridworld benchmark: GSR vs uniform weights");
  bench.opts.add(c_bench);
  c_bench->add_option("--seed", bench.seeds, "Seed(s), comma separated")->delimiter(',');
  c_bench->add_option("--out", bench.out, "Results directory")->required();

  SweepArgs sweep;
  auto* c_sweep = app.add_subcommand("sweep", "Hyperparameter sweep on the gridworld benchmark");
  sweep.opts.add(c_sweep);
  c_sweep->add_option("--grid", sweep.grid, "Axes: beta1=... beta2=... alpha=...");
  c_sweep->add_option("--seeds", sweep.seeds, "Seeds, comma separated")->delimiter(',');
  c_sweep->add_option("--out", sweep.out, "Per-run CSV")->required();
  c_sweep->add_option("--summary-out", sweep.summary_out, "Seed-averaged CSV (default: <out>_summary.csv)");

  PipelineArgs pipe;
  auto* c_pipe = app.add_subcommand("pipeline", "Graph, values and weights in one run, with a manifest");
  c_pipe->add_option("--input", pipe.input, "Dataset file");
  c_pipe->add_option("--out", pipe.out, "Output directory")->required();
  c_pipe->add_option("--replay", pipe.replay, "Re-run the configuration recorded in a manifest");
  c_pipe->add_option("--log-extremes", pipe.log_extremes, "Extreme weights recorded in the manifest");
  c_pipe->add_flag("--allow-failures", pipe.allow_failures, "Accept failure trajectories");
  pipe.engine.add_preset(c_pipe);
  pipe.engine.add_graph(c_pipe);
  pipe.engine.add_reweight(c_pipe);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitValidation;
  }

  Log log;
  log.verbosity = quiet ? 0 : 1 + verbose;
  try {
    if (threads) check(gsr_set_threads(*threads));
    if (*c_ingest) return run_ingest(ingest, log);
    if (*c_build) return run_build(build, log);
    if (*c_values) return run_values(values, log);
    if (*c_weigh) return run_weigh(weigh, log);
    if (*c_report) return run_report(report, log);
    if (*c_bench) return run_bench(bench, log);
    if (*c_sweep) return run_sweep(sweep, log);
    if (*c_pipe) return run_pipeline(pipe, log);
  } catch (const Failure& f) {
    std::cerr << "gsr: " << f.message << '\n';
    return f.exit_code;
  } catch (const std::exception& e) {
    std::cerr << "gsr: internal error: " << e.what() << '\n';
    return kExitInvariant;
  }
  return kExitValidation;
}
