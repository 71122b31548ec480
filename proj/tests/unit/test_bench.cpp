#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <map>
#include <set>

#include "core/bench.hpp"
#include "core/error.hpp"
#include "core/parallel.hpp"
#include "core/value.hpp"
#include "support.hpp"

using namespace gsr;
using namespace gsr::bench;

namespace {

std::vector<std::vector<double>> unit_weights(const DemoDataset& ds) {
  std::vector<std::vector<double>> w(ds.num_trajectories());
  for (std::size_t t = 0; t < w.size(); ++t) w[t].assign(ds.num_steps(t), 1.0);
  return w;
}

// One-hot action rows for a 2-D dataset built by hand.
Trajectory hand_trajectory(const std::vector<std::pair<float, float>>& points, const std::vector<int>& actions) {
  Trajectory t;
  for (std::size_t i = 0; i < points.size(); ++i) {
    t.embeddings.push_back(points[i].first);
    t.embeddings.push_back(points[i].second);
    for (int a = 0; a < kNumActions; ++a) t.actions.push_back(a == actions[i] ? 1.0f : 0.0f);
  }
  return t;
}

}  // namespace

TEST(GridWorld, DistancesAndMoves) {
  const GridWorld env = make_env("grid10");
  EXPECT_EQ(env.distance({8, 0}), 0);
  EXPECT_EQ(env.distance({8, 2}), 1);
  // Around the wall: up to row 7, across, and down to row 1.
  EXPECT_EQ(env.distance({0, 0}), 7 + 8 + 6);
  EXPECT_EQ(env.move({3, 0}, kRight), (Cell{3, 0}));
  EXPECT_EQ(env.move({0, 0}, kLeft), (Cell{0, 0}));
  EXPECT_EQ(env.move({0, 0}, kUp), (Cell{0, 1}));
  for (const Cell& c : env.free_cells()) {
    if (env.is_goal(c)) continue;
    for (int a : env.optimal_actions(c)) EXPECT_EQ(env.distance(env.move(c, a)), env.distance(c) - 1);
  }
  EXPECT_THROW(make_env("nope"), Error);
}

TEST(Demonstrators, OptimalOnOpenGridWalksManhattanPaths) {
  const GridWorld env = make_env("open10");
  DemonstratorProfile p = default_profile(ProfileKind::Optimal);
  p.noise_p = 0.0;
  std::mt19937_64 rng(3);
  for (int i = 0; i < 200; ++i) {
    const Cell start = env.start_region()[static_cast<std::size_t>(i) % env.start_region().size()];
    const Episode ep = generate_episode(env, p, start, rng);
    EXPECT_EQ(ep.cells.size() - 1, static_cast<std::size_t>(std::abs(9 - start.x) + std::abs(9 - start.y)));
    EXPECT_TRUE(env.is_goal(ep.cells.back()));
    EXPECT_EQ(ep.actions.back(), kStay);
  }
}

TEST(Demonstrators, RetryIsSlowerThanOptimal) {
  const GridWorld env = make_env("grid10");
  double retry = 0, optimal = 0;
  std::mt19937_64 rng(9);
  for (int i = 0; i < 1000; ++i) {
    retry += static_cast<double>(generate_episode(env, default_profile(ProfileKind::Retry), {0, 0}, rng).cells.size());
    optimal += static_cast<double>(generate_episode(env, default_profile(ProfileKind::Optimal), {0, 0}, rng).cells.size());
  }
  EXPECT_GT(retry, optimal * 1.2);
}

TEST(Demonstrators, SeededGenerationIsReproducible) {
  const GridWorld env = make_env("grid10");
  const Embedder emb(env, {.proj_dim = 8, .noise_sigma = 0.02, .seed = 4});
  const auto mix = parse_demo_mix("retry:5,detour:3,optimal:2");
  const DemoSet a = generate_demos(env, mix, emb, 17);
  const DemoSet b = generate_demos(env, mix, emb, 17);
  const DemoSet c = generate_demos(env, mix, emb, 18);
  EXPECT_TRUE(a.dataset == b.dataset);
  EXPECT_FALSE(a.dataset == c.dataset);
  EXPECT_EQ(a.dataset.num_trajectories(), 10u);
  EXPECT_EQ(a.dataset.embedding_dim(), 8u);
  for (const Episode& ep : a.episodes) {
    EXPECT_TRUE(env.is_goal(ep.cells.back()));
    EXPECT_LE(ep.cells.size() - 1, env.max_horizon());
  }
}

TEST(Demonstrators, MixParsing) {
  const auto mix = parse_demo_mix("retry:35,detour:15,optimal:15");
  ASSERT_EQ(mix.size(), 3u);
  EXPECT_EQ(mix[0].profile.kind, ProfileKind::Retry);
  EXPECT_EQ(mix[1].count, 15u);
  EXPECT_EQ(format_demo_mix(mix), "retry:35,detour:15,optimal:15");
  for (const char* bad : {"", "retry", "retry:0", "walk:3", "retry:x"}) {
    EXPECT_THROW(parse_demo_mix(bad), Error) << bad;
  }
}

TEST(Demonstrators, UnreachableHorizonTimesOut) {
  const GridWorld env(6, 1, {}, {{0, 0}}, {{5, 0}}, 3);
  const Embedder emb(env, {});
  try {
    generate_demos(env, parse_demo_mix("optimal:1"), emb, 1);
    FAIL() << "expected GenerationTimeout";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::GenerationTimeout);
  }
}

TEST(Demonstrators, GridDatasetRoundTripsThroughDisk) {
  const GridWorld env = make_env("grid10");
  const Embedder emb(env, {.proj_dim = 16, .noise_sigma = 0.02, .seed = 2});
  const DemoSet demos = generate_demos(env, parse_demo_mix("retry:50,detour:25,optimal:25"), emb, 5);
  ASSERT_EQ(demos.dataset.num_trajectories(), 100u);
  const auto dir = gsr::testing::temp_dir("bench_roundtrip");
  save_dataset(demos.dataset, dir / "demos.gsrd");
  save_dataset(demos.dataset, dir / "demos.jsonl");
  EXPECT_TRUE(load_dataset(dir / "demos.gsrd") == demos.dataset);
  EXPECT_TRUE(load_dataset(dir / "demos.jsonl") == demos.dataset);
}

TEST(KnnPolicy, UnanimousNeighborsDecide) {
  std::vector<Trajectory> trajs{hand_trajectory({{0, 0}, {0, 1}, {0, 2}}, {kUp, kUp, kStay})};
  const DemoDataset ds(2, kNumActions, trajs);
  const KnnPolicy policy(ds, unit_weights(ds), 5);
  EXPECT_EQ(policy.size(), 2u);  // terminal step excluded
  const float q[2] = {0.1f, 0.4f};
  EXPECT_EQ(policy.act(q), kUp);
}

TEST(KnnPolicy, WeightsDecideTheVote) {
  // Three "right" samples against one "down" sample at the same point.
  std::vector<Trajectory> trajs;
  for (int i = 0; i < 3; ++i) trajs.push_back(hand_trajectory({{0, 0}, {1, 0}}, {kRight, kStay}));
  trajs.push_back(hand_trajectory({{0, 0}, {0, -1}}, {kDown, kStay}));
  const DemoDataset ds(2, kNumActions, trajs);
  auto w = unit_weights(ds);
  const float q[2] = {0, 0};
  EXPECT_EQ(KnnPolicy(ds, w, 4).act(q), kRight);
  w[3][0] = 3.5;
  EXPECT_EQ(KnnPolicy(ds, w, 4).act(q), kDown);
  w[3][0] = 0.0;
  const auto scores = KnnPolicy(ds, w, 4).scores(q);
  EXPECT_EQ(scores[kDown], 0.0);
  EXPECT_DOUBLE_EQ(scores[kRight], 3.0);
}

TEST(KnnPolicy, TiesAtTheKthDistanceAllVote) {
  // k = 1, but four samples are equally near; all of them count.
  std::vector<Trajectory> trajs;
  trajs.push_back(hand_trajectory({{1, 0}, {5, 5}}, {kLeft, kStay}));
  trajs.push_back(hand_trajectory({{-1, 0}, {5, 5}}, {kRight, kStay}));
  trajs.push_back(hand_trajectory({{0, 1}, {5, 5}}, {kRight, kStay}));
  trajs.push_back(hand_trajectory({{0, -1}, {5, 5}}, {kRight, kStay}));
  const DemoDataset ds(2, kNumActions, trajs);
  const float q[2] = {0, 0};
  EXPECT_EQ(KnnPolicy(ds, unit_weights(ds), 1).act(q), kRight);
}

TEST(KnnPolicy, RejectsBadInput) {
  std::vector<Trajectory> trajs{hand_trajectory({{0, 0}, {0, 1}}, {kUp, kStay})};
  const DemoDataset ds(2, kNumActions, trajs);
  EXPECT_THROW(KnnPolicy(ds, unit_weights(ds), 0), Error);
  EXPECT_THROW(KnnPolicy(ds, {}, 1), Error);
}

TEST(Evaluation, OracleAndStayPolicies) {
  const GridWorld env = make_env("grid10");
  const TtsReference ref = tts_reference(env, standard_scenario().demos, 200, 1);
  EXPECT_LT(ref.best, ref.worst);
  const EvalMetrics oracle = evaluate(oracle_policy(env), env, 400, 11, ref);
  EXPECT_EQ(oracle.success_rate, 1.0);
  ASSERT_TRUE(oracle.np.has_value());
  // Optimal actions under slip beat every noisy demonstrator.
  EXPECT_GE(*oracle.np, 1.0);

  const GridWorld clean(env.width(), env.height(), env.obstacles(), env.start_region(), env.goal_region(),
                        env.max_horizon(), 0.0);
  const EvalMetrics exact = evaluate(oracle_policy(clean), clean, 400, 11, {});
  for (const auto& e : exact.episodes) EXPECT_EQ(e.steps, static_cast<std::size_t>(clean.distance(e.start)));

  const EvalMetrics stay = evaluate(stay_policy(), clean, 50, 11, ref);
  EXPECT_EQ(stay.success_rate, 0.0);
  EXPECT_FALSE(stay.tts_mean.has_value());
  EXPECT_FALSE(stay.np.has_value());
}

TEST(Evaluation, MetricsMatchReferenceOnLoggedEpisodes) {
  const GridWorld env = make_env("grid10");
  const Scenario s = standard_scenario();
  const Embedder emb(env, s.embed);
  const DemoSet demos = generate_demos(env, s.demos, emb, 3);
  const KnnPolicy policy(demos.dataset, unit_weights(demos.dataset), 10);
  const TtsReference ref{20.0, 60.0};
  const EvalMetrics m = evaluate(knn_policy_fn(policy, emb), env, 300, 8, ref, 40);
  const auto logged = parse_episodes_jsonl(episodes_jsonl(m.episodes));
  ASSERT_EQ(logged.size(), 300u);

  // Reference computation straight from the log.
  double n_ok = 0, sum = 0, sq = 0;
  for (const auto& e : logged) {
    if (!e.success) continue;
    n_ok += 1;
    sum += static_cast<double>(e.steps);
  }
  const double mean = sum / n_ok;
  for (const auto& e : logged)
    if (e.success) sq += (static_cast<double>(e.steps) - mean) * (static_cast<double>(e.steps) - mean);
  EXPECT_GT(n_ok, 0);
  EXPECT_LT(n_ok, 300);  // the 40-step budget cuts some rollouts
  EXPECT_DOUBLE_EQ(m.success_rate, n_ok / 300.0);
  EXPECT_NEAR(*m.tts_mean, mean, 1e-12);
  EXPECT_NEAR(*m.tts_std, std::sqrt(sq / n_ok), 1e-12);
  EXPECT_NEAR(*m.np, (60.0 - mean) / 40.0, 1e-12);

  const EvalMetrics again = summarize(logged, ref);
  EXPECT_EQ(again.success_rate, m.success_rate);
  EXPECT_EQ(again.tts_mean, m.tts_mean);
}

TEST(Evaluation, ThreadCountDoesNotChangeResults) {
  const GridWorld env = make_env("grid10");
  Scenario s = standard_scenario();
  s.eval_trials = 100;
  s.reference_episodes = 50;
  set_thread_count(1);
  const ScenarioResult a = run_scenario(s, 2);
  set_thread_count(4);
  const ScenarioResult b = run_scenario(s, 2);
  set_thread_count(0);
  EXPECT_EQ(a.gsr.success_rate, b.gsr.success_rate);
  EXPECT_EQ(a.gsr.tts_mean, b.gsr.tts_mean);
  EXPECT_EQ(a.uniform.tts_mean, b.uniform.tts_mean);
  EXPECT_EQ(a.total_weight, b.total_weight);
  EXPECT_EQ(a.augmented_edges, b.augmented_edges);
}

TEST(Scenario, GraphOfStandardDemosIsDeterministic) {
  const Scenario s = standard_scenario();
  const GridWorld env = make_env(s.env);
  const Embedder emb(env, s.embed);
  const DemoSet demos = generate_demos(env, s.demos, emb, 1);
  EXPECT_EQ(demos.dataset.num_trajectories(), 50u);
  const DemoGraph a = build_graph(demos.dataset, s.graph);
  const DemoGraph b = build_graph(generate_demos(env, s.demos, emb, 1).dataset, s.graph);
  EXPECT_EQ(a.content_hash(), b.content_hash());
  EXPECT_GT(a.count_edges(EdgeKind::Augmented), 0u);
}

TEST(Scenario, SoftTabularArgmaxMatchesHardSelection) {
  const GridWorld base = make_env("grid10");
  const GridWorld env(base.width(), base.height(), base.obstacles(), base.start_region(), base.goal_region(),
                      base.max_horizon(), 0.0);
  const Embedder emb(env, {});
  const DemoSet demos = generate_demos(env, standard_scenario().demos, emb, 6);
  GraphConfig cfg;
  cfg.stride = 1;
  cfg.alpha = 0.5;
  const DemoGraph g = build_graph(demos.dataset, cfg);
  const TabularWeights hard = tabular_weights(g, demos.dataset, TabularMode::Hard);
  const TabularWeights soft = tabular_weights(g, demos.dataset, TabularMode::Soft);
  ASSERT_GT(hard.multi_action_states, 0u);
  std::map<std::size_t, double> best;
  for (VertexId v = 0; v < g.num_sources(); ++v) best[soft.state_of[v]] = std::max(best[soft.state_of[v]], soft.weight[v]);
  for (VertexId v = 0; v < g.num_sources(); ++v) {
    EXPECT_EQ(hard.weight[v] == 1.0, soft.weight[v] == best[soft.state_of[v]]) << v;
  }
}

TEST(Sweep, SinglePointMatchesScenarioRun) {
  Scenario s = standard_scenario();
  s.eval_trials = 100;
  s.reference_episodes = 50;
  const auto rows = run_sweep(s, {{2.0}, {1.0}, {1.0}}, {4});
  ASSERT_EQ(rows.size(), 1u);
  const ScenarioResult direct = run_scenario(s, 4, false);
  EXPECT_EQ(rows[0].result.gsr.success_rate, direct.gsr.success_rate);
  EXPECT_EQ(rows[0].result.gsr.tts_mean, direct.gsr.tts_mean);
  EXPECT_EQ(rows[0].result.stats.contrast(), direct.stats.contrast());

  const std::string csv = sweep_csv(rows);
  EXPECT_EQ(csv.substr(0, csv.find(',')), "beta1");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 2);
  EXPECT_THROW(run_sweep(s, {{}, {1.0}, {1.0}}, {1}), Error);
}

TEST(Sweep, ZeroAlphaAddsNoAugmentedEdges) {
  Scenario s = standard_scenario();
  s.eval_trials = 50;
  s.reference_episodes = 20;
  const auto rows = run_sweep(s, {{2.0}, {1.0}, {0.0, 1.0}}, {1, 2});
  ASSERT_EQ(rows.size(), 4u);
  EXPECT_EQ(rows[0].result.augmented_edges, 0u);
  EXPECT_EQ(rows[1].result.augmented_edges, 0u);
  EXPECT_GT(rows[2].result.augmented_edges, 0u);
  const std::string summary = sweep_summary_csv(rows);
  EXPECT_EQ(std::count(summary.begin(), summary.end(), '\n'), 3);
}

TEST(PerfDataset, ShapeAndDeterminism) {
  const DemoDataset ds = make_perf_dataset(1001, 16, 100, 3);
  EXPECT_EQ(ds.total_steps(), 1001u);
  EXPECT_EQ(ds.embedding_dim(), 16u);
  for (std::size_t t = 0; t < ds.num_trajectories(); ++t) EXPECT_GE(ds.num_steps(t), 2u);
  EXPECT_TRUE(ds == make_perf_dataset(1001, 16, 100, 3));
  EXPECT_NO_THROW(ds.validate());
}

TEST(PerfDataset, ExtentScalesLatentSquare) {
  EXPECT_THROW(make_perf_dataset(100, 4, 50, 1, 0.0), Error);
  EXPECT_THROW(make_perf_dataset(100, 4, 50, 1, -1.0), Error);
  EXPECT_TRUE(make_perf_dataset(500, 8, 50, 2, 1.0) == make_perf_dataset(500, 8, 50, 2));
  EXPECT_FALSE(make_perf_dataset(500, 8, 50, 2, 0.5) == make_perf_dataset(500, 8, 50, 2));
}
