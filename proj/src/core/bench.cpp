#include "core/bench.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <numeric>
#include <sstream>
#include <unordered_set>

#include "core/error.hpp"
#include "core/hash.hpp"
#include "core/parallel.hpp"
#include "core/text_io.hpp"
#include "core/value.hpp"
#include "json.hpp"

namespace gsr::bench {

namespace {

constexpr int kDx[kNumActions] = {0, 0, -1, 1, 0};
constexpr int kDy[kNumActions] = {1, -1, 0, 0, 0};

template <typename T>
const T& pick(const std::vector<T>& v, std::mt19937_64& rng) {
  std::uniform_int_distribution<std::size_t> d(0, v.size() - 1);
  return v[d(rng)];
}

bool chance(double p, std::mt19937_64& rng) {
  if (p <= 0.0) return false;
  return std::uniform_real_distribution<double>(0.0, 1.0)(rng) < p;
}

int random_move(std::mt19937_64& rng) { return std::uniform_int_distribution<int>(0, 3)(rng); }

// Moves that bring `dist` at the successor to `dist[c] + delta`.
std::vector<int> moves_with_delta(const GridWorld& env, const std::vector<int>& dist, Cell c, int delta) {
  std::vector<int> out;
  const int here = dist[env.index(c)];
  for (int a = 0; a < 4; ++a) {
    const Cell n = env.move(c, a);
    if (n == c) continue;
    const int d = dist[env.index(n)];
    if (d >= 0 && d == here + delta) out.push_back(a);
  }
  return out;
}

}  // namespace

const char* action_name(int action) {
  static constexpr const char* kNames[kNumActions] = {"up", "down", "left", "right", "stay"};
  return action >= 0 && action < kNumActions ? kNames[action] : "?";
}

GridWorld::GridWorld(int width, int height, std::vector<Cell> obstacles, std::vector<Cell> start_region,
                     std::vector<Cell> goal_region, std::size_t max_horizon, double slip_p)
    : width_(width),
      height_(height),
      obstacles_(std::move(obstacles)),
      start_(std::move(start_region)),
      goal_(std::move(goal_region)),
      max_horizon_(max_horizon),
      slip_p_(slip_p) {
  if (width_ < 2 || height_ < 1) fail(ErrorCode::InvalidConfig, "grid must be at least 2x1");
  if (start_.empty() || goal_.empty()) fail(ErrorCode::InvalidConfig, "grid needs start and goal cells");
  if (max_horizon_ == 0) fail(ErrorCode::InvalidConfig, "max_horizon must be positive");
  if (!(slip_p_ >= 0.0 && slip_p_ <= 1.0)) fail(ErrorCode::InvalidConfig, "slip_p must be in [0, 1]");
  const std::size_t n = static_cast<std::size_t>(width_) * height_;
  blocked_.assign(n, 0);
  goal_mask_.assign(n, 0);
  for (const Cell& c : obstacles_) {
    if (!inside(c)) fail(ErrorCode::InvalidConfig, "obstacle outside the grid");
    blocked_[index(c)] = 1;
  }
  for (const Cell& c : goal_) {
    if (!free(c)) fail(ErrorCode::InvalidConfig, "goal cell is blocked or outside the grid");
    goal_mask_[index(c)] = 1;
  }
  dist_ = bfs(goal_);
  for (const Cell& c : start_) {
    if (!free(c) || dist_[index(c)] < 0) fail(ErrorCode::InvalidConfig, "goal not reachable from a start cell");
  }
}

std::vector<Cell> GridWorld::free_cells() const {
  std::vector<Cell> out;
  for (int y = 0; y < height_; ++y)
    for (int x = 0; x < width_; ++x)
      if (free({x, y})) out.push_back({x, y});
  return out;
}

Cell GridWorld::move(Cell c, int action) const {
  const Cell n{c.x + kDx[action], c.y + kDy[action]};
  return free(n) ? n : c;
}

Cell GridWorld::step(Cell c, int action, std::mt19937_64& rng) const {
  if (chance(slip_p_, rng)) action = std::uniform_int_distribution<int>(0, kNumActions - 1)(rng);
  return move(c, action);
}

std::vector<int> GridWorld::optimal_actions(Cell c) const {
  return moves_with_delta(*this, dist_, c, -1);
}

std::vector<int> GridWorld::distances_to(Cell target) const { return bfs({target}); }

std::vector<int> GridWorld::bfs(const std::vector<Cell>& sources) const {
  std::vector<int> dist(static_cast<std::size_t>(width_) * height_, -1);
  std::deque<Cell> queue;
  for (const Cell& s : sources) {
    if (!free(s) || dist[index(s)] == 0) continue;
    dist[index(s)] = 0;
    queue.push_back(s);
  }
  while (!queue.empty()) {
    const Cell c = queue.front();
    queue.pop_front();
    for (int a = 0; a < 4; ++a) {
      const Cell n{c.x + kDx[a], c.y + kDy[a]};
      if (!free(n) || dist[index(n)] >= 0) continue;
      dist[index(n)] = dist[index(c)] + 1;
      queue.push_back(n);
    }
  }
  return dist;
}

GridWorld make_env(std::string_view name) {
  if (name == "grid10") {
    // A wall at x = 4 leaves a gap in the top three rows; starts sit in the
    // lower left and the goal in the lower right.
    std::vector<Cell> wall;
    for (int y = 0; y <= 6; ++y) wall.push_back({4, y});
    std::vector<Cell> start;
    for (int y = 0; y <= 2; ++y)
      for (int x = 0; x <= 1; ++x) start.push_back({x, y});
    return GridWorld(10, 10, wall, start, {{8, 0}, {9, 0}, {8, 1}, {9, 1}}, 100, 0.1);
  }
  if (name == "open10") {
    std::vector<Cell> start;
    for (int y = 0; y < 10; ++y) start.push_back({0, y});
    return GridWorld(10, 10, {}, start, {{9, 9}}, 100, 0.0);
  }
  if (name == "grid6") {
    std::vector<Cell> wall;
    for (int y = 0; y <= 3; ++y) wall.push_back({2, y});
    return GridWorld(6, 6, wall, {{0, 0}, {0, 1}}, {{5, 0}}, 60, 0.0);
  }
  fail(ErrorCode::InvalidConfig, "unknown environment '" + std::string(name) + "'");
}

const char* profile_name(ProfileKind kind) {
  switch (kind) {
    case ProfileKind::Optimal: return "optimal";
    case ProfileKind::Detour: return "detour";
    case ProfileKind::Retry: return "retry";
    case ProfileKind::Slow: return "slow";
  }
  return "?";
}

std::optional<ProfileKind> parse_profile(std::string_view name) {
  for (ProfileKind k : {ProfileKind::Optimal, ProfileKind::Detour, ProfileKind::Retry, ProfileKind::Slow})
    if (name == profile_name(k)) return k;
  return std::nullopt;
}

DemonstratorProfile default_profile(ProfileKind kind) {
  DemonstratorProfile p;
  p.kind = kind;
  p.noise_p = 0.2;
  switch (kind) {
    case ProfileKind::Optimal:
    case ProfileKind::Detour:
      break;
    case ProfileKind::Retry:
      p.retry_p = 0.9;
      p.max_retries = 8;
      break;
    case ProfileKind::Slow:
      p.noise_p = 0.3;
      break;
  }
  return p;
}

std::vector<ProfileCount> parse_demo_mix(std::string_view spec) {
  std::vector<ProfileCount> mix;
  for (const std::string_view item : split(spec, ',')) {
    const auto parts = split(item, ':');
    std::size_t count = 0;
    const auto kind = parts.size() == 2 ? parse_profile(parts[0]) : std::nullopt;
    if (!kind || !parse_int(parts[1], count) || count == 0) {
      fail(ErrorCode::InvalidConfig, "bad demo mix entry '" + std::string(item) + "' (want profile:count)");
    }
    mix.push_back({default_profile(*kind), count});
  }
  if (mix.empty()) fail(ErrorCode::InvalidConfig, "empty demo mix");
  return mix;
}

std::string format_demo_mix(const std::vector<ProfileCount>& mix) {
  std::string out;
  for (const auto& pc : mix) {
    if (!out.empty()) out += ',';
    out += std::string(profile_name(pc.profile.kind)) + ':' + std::to_string(pc.count);
  }
  return out;
}

Embedder::Embedder(const GridWorld& env, EmbedConfig cfg)
    : sx_(1.0 / (env.width() - 1)), sy_(env.height() > 1 ? 1.0 / (env.height() - 1) : 1.0), cfg_(cfg) {
  if (!(cfg_.noise_sigma >= 0.0)) fail(ErrorCode::InvalidConfig, "noise_sigma must be >= 0");
  if (cfg_.proj_dim > 0) {
    std::mt19937_64 rng(mix_seed(cfg_.seed, 0x70726f6aull));
    std::normal_distribution<double> n(0.0, 1.0 / std::sqrt(static_cast<double>(cfg_.proj_dim)));
    proj_.resize(cfg_.proj_dim * 2);
    for (double& p : proj_) p = n(rng);
  }
}

std::vector<float> Embedder::embed(Cell c, std::mt19937_64* rng) const {
  const double x = c.x * sx_, y = c.y * sy_;
  std::vector<double> out;
  if (cfg_.proj_dim == 0) {
    out = {x, y};
  } else {
    out.resize(cfg_.proj_dim);
    for (std::size_t i = 0; i < cfg_.proj_dim; ++i) out[i] = proj_[2 * i] * x + proj_[2 * i + 1] * y;
  }
  if (rng != nullptr && cfg_.noise_sigma > 0.0) {
    std::normal_distribution<double> n(0.0, cfg_.noise_sigma);
    for (double& v : out) v += n(*rng);
  }
  return std::vector<float>(out.begin(), out.end());
}

Episode generate_episode(const GridWorld& env, const DemonstratorProfile& profile, Cell start,
                         std::mt19937_64& rng) {
  Episode ep;
  ep.kind = profile.kind;
  Cell cell = start;
  const std::size_t horizon = env.max_horizon();
  auto done = [&] { return env.is_goal(cell) || ep.actions.size() >= horizon; };
  auto act = [&](int a) {
    ep.cells.push_back(cell);
    ep.actions.push_back(a);
    cell = env.step(cell, a, rng);
  };
  auto toward = [&](const std::vector<int>& dist) {
    if (chance(profile.noise_p, rng)) return random_move(rng);
    const auto best = moves_with_delta(env, dist, cell, -1);
    return best.empty() ? random_move(rng) : pick(best, rng);
  };
  std::vector<int> goal_dist(static_cast<std::size_t>(env.width()) * env.height());
  for (const Cell& c : env.free_cells()) goal_dist[env.index(c)] = env.distance(c);
  for (const Cell& c : env.obstacles()) goal_dist[env.index(c)] = -1;

  switch (profile.kind) {
    case ProfileKind::Optimal:
      while (!done()) act(toward(goal_dist));
      break;
    case ProfileKind::Slow:
      while (!done()) {
        if (chance(profile.noise_p, rng)) {
          act(kStay);
        } else {
          const auto best = env.optimal_actions(cell);
          act(pick(best, rng));
        }
      }
      break;
    case ProfileKind::Detour: {
      std::vector<Cell> candidates;
      for (const Cell& c : env.free_cells())
        if (!env.is_goal(c)) candidates.push_back(c);
      const Cell waypoint = pick(candidates, rng);
      const auto wp_dist = env.distances_to(waypoint);
      while (!done() && !(cell == waypoint)) act(toward(wp_dist));
      while (!done()) act(toward(goal_dist));
      break;
    }
    case ProfileKind::Retry: {
      std::size_t retries = 0;
      while (!done()) {
        if (env.distance(cell) == 1 && retries < profile.max_retries && chance(profile.retry_p, rng)) {
          ++retries;
          for (std::size_t j = 0; j < profile.backoff && !done(); ++j) {
            const auto away = moves_with_delta(env, goal_dist, cell, +1);
            act(away.empty() ? random_move(rng) : pick(away, rng));
          }
          continue;
        }
        act(toward(goal_dist));
      }
      break;
    }
  }
  ep.cells.push_back(cell);
  ep.actions.push_back(kStay);
  return ep;
}

DemoDataset episodes_to_dataset(const std::vector<Episode>& episodes, const Embedder& embedder,
                                std::uint64_t noise_seed) {
  std::vector<Trajectory> trajs(episodes.size());
  for (std::size_t i = 0; i < episodes.size(); ++i) {
    std::mt19937_64 rng(mix_seed(noise_seed, i));
    Trajectory& t = trajs[i];
    for (std::size_t s = 0; s < episodes[i].cells.size(); ++s) {
      const auto e = embedder.embed(episodes[i].cells[s], &rng);
      t.embeddings.insert(t.embeddings.end(), e.begin(), e.end());
      for (int a = 0; a < kNumActions; ++a) t.actions.push_back(a == episodes[i].actions[s] ? 1.0f : 0.0f);
    }
  }
  return DemoDataset(embedder.dim(), kNumActions, std::move(trajs));
}

DemoSet generate_demos(const GridWorld& env, const std::vector<ProfileCount>& mix,
                       const Embedder& embedder, std::uint64_t seed) {
  DemoSet out;
  std::size_t traj = 0;
  for (const ProfileCount& pc : mix) {
    for (std::size_t i = 0; i < pc.count; ++i, ++traj) {
      std::mt19937_64 rng(mix_seed(seed ^ pc.profile.seed, traj));
      bool ok = false;
      for (int attempt = 0; attempt < 200 && !ok; ++attempt) {
        Episode ep = generate_episode(env, pc.profile, pick(env.start_region(), rng), rng);
        if (env.is_goal(ep.cells.back()) && ep.cells.size() >= 2) {
          out.episodes.push_back(std::move(ep));
          ok = true;
        }
      }
      if (!ok) {
        fail(ErrorCode::GenerationTimeout, std::string("profile '") + profile_name(pc.profile.kind) +
                                               "' did not reach the goal within the horizon");
      }
    }
  }
  out.dataset = episodes_to_dataset(out.episodes, embedder, mix_seed(seed, 0x6e6f697365ull));
  out.dataset.metadata()["generator"] = "gridworld";
  return out;
}

KnnPolicy::KnnPolicy(const DemoDataset& ds, const std::vector<std::vector<double>>& step_weights,
                     std::size_t k_policy)
    : dim_(ds.embedding_dim()), k_(k_policy) {
  if (k_ == 0) fail(ErrorCode::InvalidConfig, "k_policy must be >= 1");
  if (ds.action_dim() == 0) fail(ErrorCode::InvalidConfig, "policy needs action vectors");
  if (step_weights.size() != ds.num_trajectories()) {
    fail(ErrorCode::InvariantViolation, "step weights do not match the dataset");
  }
  for (std::size_t t = 0; t < ds.num_trajectories(); ++t) {
    const std::size_t n = ds.num_steps(t);
    if (step_weights[t].size() != n) fail(ErrorCode::InvariantViolation, "step weights do not match the dataset");
    for (std::size_t s = 0; s + 1 < n; ++s) {
      const StepView sv = ds.step(t, s);
      points_.insert(points_.end(), sv.embedding.begin(), sv.embedding.end());
      actions_.push_back(static_cast<int>(std::max_element(sv.action.begin(), sv.action.end()) - sv.action.begin()));
      weights_.push_back(step_weights[t][s]);
    }
  }
  if (actions_.empty()) fail(ErrorCode::EmptyDataset, "policy dataset has no transitions");
  index_.emplace(points_, dim_);

  // Bandwidth: median nearest-neighbor distance among distinct points.
  std::vector<float> distinct;
  std::unordered_set<std::string> seen;
  for (std::size_t i = 0; i < actions_.size(); ++i) {
    std::string key(reinterpret_cast<const char*>(points_.data() + i * dim_), dim_ * sizeof(float));
    if (seen.insert(std::move(key)).second) {
      distinct.insert(distinct.end(), points_.begin() + static_cast<std::ptrdiff_t>(i * dim_),
                      points_.begin() + static_cast<std::ptrdiff_t>((i + 1) * dim_));
    }
  }
  const std::size_t nd = distinct.size() / dim_;
  if (nd >= 2) {
    const NeighborIndex idx(distinct, dim_);
    std::vector<double> nn(nd);
    parallel_for(nd, [&](std::size_t i) {
      Exclusion self;
      self.id = static_cast<std::uint32_t>(i);
      nn[i] = idx.knn(idx.point(self.id), 1, self).front().distance;
    });
    std::nth_element(nn.begin(), nn.begin() + static_cast<std::ptrdiff_t>(nd / 2), nn.end());
    if (nn[nd / 2] > 0.0) bandwidth_ = nn[nd / 2];
  }
}

std::vector<double> KnnPolicy::scores(std::span<const float> query) const {
  std::vector<double> score(kNumActions, 0.0);
  const auto nearest = index_->knn(query.data(), k_);
  const double kth = nearest.back().distance;
  const double inv = 1.0 / (2.0 * bandwidth_ * bandwidth_);
  for (const Neighbor& nb : index_->within(query.data(), std::nextafter(kth, kUnreachable))) {
    const int a = actions_[nb.id];
    if (a >= 0 && a < kNumActions) score[a] += weights_[nb.id] * std::exp(-nb.distance * nb.distance * inv);
  }
  return score;
}

int KnnPolicy::act(std::span<const float> query) const {
  const auto score = scores(query);
  return static_cast<int>(std::max_element(score.begin(), score.end()) - score.begin());
}

EvalMetrics summarize(std::vector<EpisodeRecord> episodes, const TtsReference& reference) {
  EvalMetrics m;
  m.trials = episodes.size();
  std::vector<double> tts;
  for (const auto& e : episodes)
    if (e.success) tts.push_back(static_cast<double>(e.steps));
  m.success_rate = m.trials == 0 ? 0.0 : static_cast<double>(tts.size()) / static_cast<double>(m.trials);
  if (!tts.empty()) {
    const double mean = std::accumulate(tts.begin(), tts.end(), 0.0) / static_cast<double>(tts.size());
    double var = 0.0;
    for (double t : tts) var += (t - mean) * (t - mean);
    m.tts_mean = mean;
    m.tts_std = std::sqrt(var / static_cast<double>(tts.size()));
    if (reference.worst > reference.best) m.np = (reference.worst - mean) / (reference.worst - reference.best);
  }
  m.episodes = std::move(episodes);
  return m;
}

EvalMetrics evaluate(const PolicyFn& policy, const GridWorld& env, std::size_t n_trials,
                     std::uint64_t seed, const TtsReference& reference, std::size_t horizon) {
  if (n_trials == 0) fail(ErrorCode::InvalidConfig, "n_trials must be >= 1");
  if (horizon == 0) horizon = env.max_horizon();
  std::vector<EpisodeRecord> records(n_trials);
  parallel_for(n_trials, [&](std::size_t i) {
    std::mt19937_64 rng(mix_seed(seed, i));
    EpisodeRecord& r = records[i];
    r.trial = i;
    r.start = pick(env.start_region(), rng);
    Cell cell = r.start;
    for (std::size_t t = 0; t <= horizon; ++t) {
      if (env.is_goal(cell)) {
        r.success = true;
        r.steps = t;
        return;
      }
      if (t == horizon) break;
      cell = env.step(cell, policy(cell, rng), rng);
    }
    r.steps = horizon;
  }, 8);
  return summarize(std::move(records), reference);
}

TtsReference tts_reference(const GridWorld& env, const std::vector<ProfileCount>& mix, std::size_t n,
                           std::uint64_t seed) {
  std::map<ProfileKind, const DemonstratorProfile*> profiles;
  for (const auto& pc : mix) profiles.emplace(pc.profile.kind, &pc.profile);
  TtsReference ref;
  bool first = true;
  for (const auto& [kind, profile] : profiles) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      std::mt19937_64 rng(mix_seed(seed + static_cast<std::uint64_t>(kind), i));
      Episode ep;
      for (int attempt = 0; attempt < 200; ++attempt) {
        ep = generate_episode(env, *profile, pick(env.start_region(), rng), rng);
        if (env.is_goal(ep.cells.back())) break;
      }
      total += static_cast<double>(ep.cells.size() - 1);
    }
    const double mean = total / static_cast<double>(std::max<std::size_t>(n, 1));
    ref.best = first ? mean : std::min(ref.best, mean);
    ref.worst = first ? mean : std::max(ref.worst, mean);
    first = false;
  }
  return ref;
}

PolicyFn knn_policy_fn(const KnnPolicy& policy, const Embedder& embedder) {
  return [&policy, &embedder](Cell c, std::mt19937_64& rng) { return policy.act(embedder.embed(c, &rng)); };
}

PolicyFn oracle_policy(const GridWorld& env) {
  return [&env](Cell c, std::mt19937_64& rng) {
    const auto best = env.optimal_actions(c);
    return best.empty() ? static_cast<int>(kStay) : pick(best, rng);
  };
}

PolicyFn stay_policy() {
  return [](Cell, std::mt19937_64&) { return static_cast<int>(kStay); };
}

std::string episodes_jsonl(const std::vector<EpisodeRecord>& episodes) {
  std::string out;
  for (const auto& e : episodes) {
    nlohmann::ordered_json j;
    j["trial"] = e.trial;
    j["start"] = {e.start.x, e.start.y};
    j["success"] = e.success;
    j["steps"] = e.steps;
    out += j.dump();
    out += '\n';
  }
  return out;
}

std::vector<EpisodeRecord> parse_episodes_jsonl(const std::string& text) {
  std::vector<EpisodeRecord> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      EpisodeRecord r;
      r.trial = j.at("trial").get<std::size_t>();
      r.start = {j.at("start").at(0).get<int>(), j.at("start").at(1).get<int>()};
      r.success = j.at("success").get<bool>();
      r.steps = j.at("steps").get<std::size_t>();
      out.push_back(r);
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorCode::MalformedFile, std::string("episode log: ") + e.what());
    }
  }
  return out;
}

Scenario standard_scenario() {
  Scenario s;
  s.env = "grid10";
  s.demos = {{default_profile(ProfileKind::Retry), 25},
             {default_profile(ProfileKind::Detour), 10},
             {default_profile(ProfileKind::Optimal), 15}};
  s.embed.noise_sigma = 0.02;
  s.graph.stride = 1;
  s.graph.alpha = 1.0;
  s.reweight.beta1 = 2.0;
  s.reweight.beta2 = 1.0;
  return s;
}

Scenario sweep_scenario() {
  Scenario s = standard_scenario();
  s.eval_horizon = 50;
  return s;
}

Scenario retry_scenario() {
  Scenario s = sweep_scenario();
  s.demos = {{default_profile(ProfileKind::Retry), 50}};
  return s;
}

ScenarioResult run_scenario(const Scenario& scenario, std::uint64_t seed, bool evaluate_uniform) {
  const GridWorld env = make_env(scenario.env);
  const Embedder embedder(env, scenario.embed);
  const DemoSet demos = generate_demos(env, scenario.demos, embedder, seed);
  const DemoGraph graph = build_graph(demos.dataset, scenario.graph);
  const ValueTable values = compute_values(graph);
  const WeightTable weights = reallocate(graph, values, scenario.reweight);
  const TtsReference ref = tts_reference(env, scenario.demos, scenario.reference_episodes, 0x7e57ull);

  ScenarioResult r;
  r.seed = seed;
  r.vertices = graph.num_vertices();
  r.augmented_edges = graph.count_edges(EdgeKind::Augmented);
  r.total_weight = weights.total_vertex_weight();
  r.sources = weights.active_sources;
  r.stats = weight_stats(weights.step_weight, "gsr", scenario.reweight.beta1, scenario.reweight.beta2);

  const std::uint64_t eval_seed = mix_seed(seed, 0x6576616cull);
  const KnnPolicy gsr_policy(demos.dataset, weights.step_weight, scenario.k_policy);
  r.gsr = evaluate(knn_policy_fn(gsr_policy, embedder), env, scenario.eval_trials, eval_seed, ref,
                   scenario.eval_horizon);
  if (evaluate_uniform) {
    std::vector<std::vector<double>> ones(demos.dataset.num_trajectories());
    for (std::size_t t = 0; t < ones.size(); ++t) ones[t].assign(demos.dataset.num_steps(t), 1.0);
    const KnnPolicy uniform(demos.dataset, ones, scenario.k_policy);
    r.uniform = evaluate(knn_policy_fn(uniform, embedder), env, scenario.eval_trials, eval_seed, ref,
                   scenario.eval_horizon);
  }
  return r;
}

std::vector<SweepRow> run_sweep(const Scenario& scenario, const SweepGrid& grid,
                                const std::vector<std::uint64_t>& seeds) {
  if (grid.beta1.empty() || grid.beta2.empty() || grid.alpha.empty() || seeds.empty()) {
    fail(ErrorCode::InvalidConfig, "sweep grid and seed list must be non-empty");
  }
  std::vector<SweepRow> rows;
  for (double a : grid.alpha) {
    for (double b1 : grid.beta1) {
      for (double b2 : grid.beta2) {
        Scenario s = scenario;
        s.graph.alpha = a;
        s.reweight.beta1 = b1;
        s.reweight.beta2 = b2;
        for (std::uint64_t seed : seeds) {
          SweepRow row;
          row.beta1 = b1;
          row.beta2 = b2;
          row.alpha = a;
          row.seed = seed;
          row.result = run_scenario(s, seed, false);
          rows.push_back(std::move(row));
        }
      }
    }
  }
  return rows;
}

namespace {

std::string opt(const std::optional<double>& v) { return v ? format_double(*v) : std::string(); }

}  // namespace

std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::string out =
      "beta1,beta2,alpha,seed,sr,tts,np,contrast,frac_below_half,frac_above_1_5,frac_zero,variance,"
      "augmented_edges\n";
  for (const auto& r : rows) {
    const auto& m = r.result.gsr;
    const auto& st = r.result.stats;
    out += format_double(r.beta1) + ',' + format_double(r.beta2) + ',' + format_double(r.alpha) + ',' +
           std::to_string(r.seed) + ',' + format_double(m.success_rate) + ',' + opt(m.tts_mean) + ',' +
           opt(m.np) + ',' + format_double(st.contrast()) + ',' + format_double(st.frac_below_half) + ',' +
           format_double(st.frac_above_1_5) + ',' + format_double(st.frac_zero) + ',' +
           format_double(st.variance) + ',' + std::to_string(r.result.augmented_edges) + '\n';
  }
  return out;
}

std::string sweep_summary_csv(const std::vector<SweepRow>& rows) {
  struct Acc {
    double sr = 0, np = 0, tts = 0, contrast = 0;
    std::size_t n = 0, n_np = 0;
  };
  std::vector<std::tuple<double, double, double>> order;
  std::map<std::tuple<double, double, double>, Acc> acc;
  for (const auto& r : rows) {
    const auto key = std::make_tuple(r.beta1, r.beta2, r.alpha);
    if (!acc.count(key)) order.push_back(key);
    Acc& a = acc[key];
    a.sr += r.result.gsr.success_rate;
    a.contrast += r.result.stats.contrast();
    ++a.n;
    if (r.result.gsr.np) {
      a.np += *r.result.gsr.np;
      a.tts += *r.result.gsr.tts_mean;
      ++a.n_np;
    }
  }
  std::string out = "beta1,beta2,alpha,seeds,sr_mean,np_mean,tts_mean,contrast_mean\n";
  for (const auto& key : order) {
    const Acc& a = acc[key];
    const double n = static_cast<double>(a.n);
    out += format_double(std::get<0>(key)) + ',' + format_double(std::get<1>(key)) + ',' +
           format_double(std::get<2>(key)) + ',' + std::to_string(a.n) + ',' + format_double(a.sr / n) + ',' +
           (a.n_np ? format_double(a.np / static_cast<double>(a.n_np)) : std::string()) + ',' +
           (a.n_np ? format_double(a.tts / static_cast<double>(a.n_np)) : std::string()) + ',' +
           format_double(a.contrast / n) + '\n';
  }
  return out;
}

DemoDataset make_perf_dataset(std::size_t total_steps, std::size_t dim, std::size_t steps_per_traj,
                              std::uint64_t seed, double extent) {
  if (total_steps < 2 || dim == 0 || steps_per_traj < 2 || !(extent > 0.0)) {
    fail(ErrorCode::InvalidConfig,
         "perf dataset needs >= 2 steps, dim >= 1, trajectories of >= 2 steps and a positive extent");
  }
  std::mt19937_64 proj_rng(mix_seed(seed, 0));
  std::normal_distribution<double> pn(0.0, 1.0 / std::sqrt(static_cast<double>(dim)));
  std::vector<double> proj(dim * 2);
  for (double& p : proj) p = pn(proj_rng);

  std::vector<std::size_t> lengths;
  for (std::size_t left = total_steps; left > 0;) {
    std::size_t n = std::min(steps_per_traj, left);
    if (left - n == 1) --n;  // never leave a one-step remainder
    lengths.push_back(n);
    left -= n;
  }

  std::vector<Trajectory> trajs(lengths.size());
  parallel_for(trajs.size(), [&](std::size_t i) {
    std::mt19937_64 rng(mix_seed(seed, i + 1));
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::normal_distribution<double> turn(0.0, 0.3), noise(0.0, 2e-4);
    double x = extent * u(rng), y = extent * u(rng), heading = 2.0 * 3.141592653589793 * u(rng);
    const double speed = 0.004;
    Trajectory& t = trajs[i];
    t.embeddings.reserve(lengths[i] * dim);
    for (std::size_t s = 0; s < lengths[i]; ++s) {
      for (std::size_t d = 0; d < dim; ++d) {
        t.embeddings.push_back(static_cast<float>(proj[2 * d] * x + proj[2 * d + 1] * y + noise(rng)));
      }
      heading += turn(rng);
      double vx = speed * std::cos(heading), vy = speed * std::sin(heading);
      if (x + vx < 0.0 || x + vx > extent) { vx = -vx; heading = 3.141592653589793 - heading; }
      if (y + vy < 0.0 || y + vy > extent) { vy = -vy; heading = -heading; }
      x += vx;
      y += vy;
      t.actions.push_back(static_cast<float>(vx / speed));
      t.actions.push_back(static_cast<float>(vy / speed));
    }
  });
  DemoDataset ds(dim, 2, std::move(trajs));
  ds.metadata()["generator"] = "perf";
  return ds;
}

}  // namespace gsr::bench
