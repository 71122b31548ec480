#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "core/dataset.hpp"
#include "core/graph.hpp"
#include "core/knn.hpp"
#include "core/reweight.hpp"

namespace gsr::bench {

struct Cell {
  int x = 0;
  int y = 0;
  friend bool operator==(const Cell&, const Cell&) = default;
};

enum Action : int { kUp = 0, kDown = 1, kLeft = 2, kRight = 3, kStay = 4 };
inline constexpr int kNumActions = 5;
const char* action_name(int action);

class GridWorld {
 public:
  GridWorld(int width, int height, std::vector<Cell> obstacles, std::vector<Cell> start_region,
            std::vector<Cell> goal_region, std::size_t max_horizon, double slip_p = 0.0);

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t max_horizon() const { return max_horizon_; }
  double slip_p() const { return slip_p_; }
  const std::vector<Cell>& start_region() const { return start_; }
  const std::vector<Cell>& goal_region() const { return goal_; }
  const std::vector<Cell>& obstacles() const { return obstacles_; }

  bool inside(Cell c) const { return c.x >= 0 && c.y >= 0 && c.x < width_ && c.y < height_; }
  bool free(Cell c) const { return inside(c) && !blocked_[index(c)]; }
  bool is_goal(Cell c) const { return inside(c) && goal_mask_[index(c)]; }
  std::vector<Cell> free_cells() const;

  // Deterministic transition; moves into walls or obstacles leave c unchanged.
  Cell move(Cell c, int action) const;
  // Transition with slip: with probability slip_p a uniformly random action
  // replaces the chosen one.
  Cell step(Cell c, int action, std::mt19937_64& rng) const;

  // Shortest step count to the goal region (-1 when unreachable).
  int distance(Cell c) const { return dist_[index(c)]; }
  // Actions whose deterministic successor is one step closer to the goal.
  std::vector<int> optimal_actions(Cell c) const;
  // BFS step counts to `target` over free cells.
  std::vector<int> distances_to(Cell target) const;

  std::size_t index(Cell c) const { return static_cast<std::size_t>(c.y) * width_ + c.x; }

 private:
  std::vector<int> bfs(const std::vector<Cell>& sources) const;

  int width_, height_;
  std::vector<Cell> obstacles_, start_, goal_;
  std::size_t max_horizon_;
  double slip_p_;
  std::vector<std::uint8_t> blocked_, goal_mask_;
  std::vector<int> dist_;
};

// Named environments: "grid10" (10x10 with a wall and a gap), "open10"
// (10x10 without obstacles), "grid6" (6x6 with a short wall).
GridWorld make_env(std::string_view name);

enum class ProfileKind { Optimal, Detour, Retry, Slow };
const char* profile_name(ProfileKind kind);
std::optional<ProfileKind> parse_profile(std::string_view name);

struct DemonstratorProfile {
  ProfileKind kind = ProfileKind::Optimal;
  // Optimal/Detour/Retry: probability of a random move at each step.
  // Slow: probability of inserting a stay action.
  double noise_p = 0.0;
  // Retry: probability that an attempt to enter the goal fails and the
  // demonstrator backs off `backoff` cells before trying again.
  double retry_p = 0.5;
  std::size_t backoff = 3;
  std::size_t max_retries = 4;
  std::uint64_t seed = 0;
};

// Defaults used by the bench scenarios. Every profile makes a random move
// with probability 0.2; Retry fails 90% of goal attempts, up to 8 times.
DemonstratorProfile default_profile(ProfileKind kind);

struct ProfileCount {
  DemonstratorProfile profile;
  std::size_t count = 0;
};

// "retry:25,detour:10,optimal:15" with default profile parameters.
std::vector<ProfileCount> parse_demo_mix(std::string_view spec);
std::string format_demo_mix(const std::vector<ProfileCount>& mix);

struct EmbedConfig {
  std::size_t proj_dim = 0;   // 0 keeps the normalized (x, y) coordinates
  double noise_sigma = 0.0;   // Gaussian noise added to every embedding
  std::uint64_t seed = 0;     // projection matrix seed
};

class Embedder {
 public:
  Embedder(const GridWorld& env, EmbedConfig cfg);
  std::size_t dim() const { return cfg_.proj_dim == 0 ? 2 : cfg_.proj_dim; }
  // Noise is drawn from `rng` when given and noise_sigma > 0.
  std::vector<float> embed(Cell c, std::mt19937_64* rng = nullptr) const;
  const EmbedConfig& config() const { return cfg_; }

 private:
  double sx_, sy_;
  EmbedConfig cfg_;
  std::vector<double> proj_;  // proj_dim x 2, row-major
};

struct Episode {
  ProfileKind kind = ProfileKind::Optimal;
  std::vector<Cell> cells;   // visited cells, terminal included
  std::vector<int> actions;  // one per cell; the terminal cell carries kStay
};

Episode generate_episode(const GridWorld& env, const DemonstratorProfile& profile, Cell start,
                         std::mt19937_64& rng);

struct DemoSet {
  DemoDataset dataset;
  std::vector<Episode> episodes;
};

// Seeded demonstrations; trajectory i uses seed mix_seed(seed, i). Episodes
// that miss the horizon are regenerated; GenerationTimeout after 200 tries.
DemoSet generate_demos(const GridWorld& env, const std::vector<ProfileCount>& mix,
                       const Embedder& embedder, std::uint64_t seed);

// Appends the dataset of `episodes` as embedded trajectories.
DemoDataset episodes_to_dataset(const std::vector<Episode>& episodes, const Embedder& embedder,
                                std::uint64_t noise_seed);

// Weighted nearest-neighbor policy over dataset steps (terminal observations
// excluded). All points tied with the k-th nearest distance vote.
class KnnPolicy {
 public:
  KnnPolicy(const DemoDataset& ds, const std::vector<std::vector<double>>& step_weights,
            std::size_t k_policy);
  // The index points into points_, so copies are not allowed.
  KnnPolicy(const KnnPolicy&) = delete;
  KnnPolicy& operator=(const KnnPolicy&) = delete;
  KnnPolicy(KnnPolicy&&) = default;
  KnnPolicy& operator=(KnnPolicy&&) = default;

  int act(std::span<const float> query) const;
  // Per-action vote totals for `query`.
  std::vector<double> scores(std::span<const float> query) const;
  double bandwidth() const { return bandwidth_; }
  std::size_t size() const { return actions_.size(); }

 private:
  std::size_t dim_;
  std::size_t k_;
  std::vector<float> points_;
  std::vector<int> actions_;
  std::vector<double> weights_;
  double bandwidth_ = 1.0;
  std::optional<NeighborIndex> index_;
};

using PolicyFn = std::function<int(Cell, std::mt19937_64&)>;

struct EpisodeRecord {
  std::size_t trial = 0;
  Cell start;
  bool success = false;
  std::size_t steps = 0;
};

struct TtsReference {
  double best = 0.0;   // lowest mean episode length across profiles
  double worst = 0.0;  // highest
};

struct EvalMetrics {
  std::size_t trials = 0;
  double success_rate = 0.0;
  std::optional<double> tts_mean;  // absent without successes
  std::optional<double> tts_std;
  std::optional<double> np;
  std::vector<EpisodeRecord> episodes;
};

// Rollouts from seeded random starts; trial i draws from mix_seed(seed, i).
// `horizon` = 0 uses the environment horizon.
EvalMetrics evaluate(const PolicyFn& policy, const GridWorld& env, std::size_t n_trials,
                     std::uint64_t seed, const TtsReference& reference, std::size_t horizon = 0);

// SR/TTS/NP from episode records alone.
EvalMetrics summarize(std::vector<EpisodeRecord> episodes, const TtsReference& reference);

// Mean episode length of each profile in `mix`, estimated from `n` seeded
// episodes per profile.
TtsReference tts_reference(const GridWorld& env, const std::vector<ProfileCount>& mix,
                           std::size_t n, std::uint64_t seed);

PolicyFn knn_policy_fn(const KnnPolicy& policy, const Embedder& embedder);
PolicyFn oracle_policy(const GridWorld& env);
PolicyFn stay_policy();

std::string episodes_jsonl(const std::vector<EpisodeRecord>& episodes);
std::vector<EpisodeRecord> parse_episodes_jsonl(const std::string& text);

struct Scenario {
  std::string env = "grid10";
  std::vector<ProfileCount> demos;
  EmbedConfig embed;
  GraphConfig graph;
  ReweightConfig reweight;
  std::size_t k_policy = 10;
  std::size_t eval_trials = 500;
  std::size_t eval_horizon = 0;  // rollout step budget; 0 uses the environment horizon
  std::size_t reference_episodes = 500;
};

// grid10, 50 demos (25 retry, 10 detour, 15 optimal), stride 1, embedding
// noise 0.02, beta1 = 2, beta2 = 1, alpha = 1, the full environment horizon.
Scenario standard_scenario();
// standard_scenario with a 50-step rollout budget, so SR tracks speed.
Scenario sweep_scenario();
// sweep_scenario with 50 Retry demonstrators only.
Scenario retry_scenario();

struct ScenarioResult {
  std::uint64_t seed = 0;
  EvalMetrics gsr;
  EvalMetrics uniform;
  WeightStats stats;
  std::size_t vertices = 0;
  std::size_t augmented_edges = 0;
  double total_weight = 0.0;
  std::size_t sources = 0;
};

// Generate demos, reweight, fit both policies and evaluate them on the same
// trial seeds.
ScenarioResult run_scenario(const Scenario& scenario, std::uint64_t seed, bool evaluate_uniform = true);

struct SweepGrid {
  std::vector<double> beta1, beta2, alpha;
};

struct SweepRow {
  double beta1 = 0, beta2 = 0, alpha = 0;
  std::uint64_t seed = 0;
  ScenarioResult result;
};

std::vector<SweepRow> run_sweep(const Scenario& scenario, const SweepGrid& grid,
                                const std::vector<std::uint64_t>& seeds);
std::string sweep_csv(const std::vector<SweepRow>& rows);
// Seed-averaged version: one row per grid point.
std::string sweep_summary_csv(const std::vector<SweepRow>& rows);

// Continuous smooth random walks in a 2-D latent square of side `extent`,
// linearly lifted to `dim` dimensions with small noise. `total_steps` is
// split into trajectories of `steps_per_traj` steps. Scaling extent with
// sqrt(total_steps) keeps the point density fixed.
DemoDataset make_perf_dataset(std::size_t total_steps, std::size_t dim, std::size_t steps_per_traj,
                              std::uint64_t seed, double extent = 1.0);

}  // namespace gsr::bench
