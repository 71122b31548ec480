#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "core/error.hpp"
#include "core/graph.hpp"
#include "core/parallel.hpp"
#include "core/reweight.hpp"
#include "core/value.hpp"
#include "support.hpp"

using namespace gsr;
using gsr::testing::dataset_from_rows;
using gsr::testing::random_dataset;

namespace {

// Reference reallocation written straight from the allocation formula: own
// neighbor search, own similarity, own goal distances, plain softmax.
std::vector<double> oracle_weights(const DemoGraph& g, std::size_t k, double beta1, double beta2) {
  const std::size_t n = g.num_sources();
  const auto fw = gsr::testing::floyd_warshall(g.num_vertices(), g.edges());
  std::vector<double> q(n);
  for (VertexId v = 0; v < n; ++v) {
    const auto next = g.successor(v);
    q[v] = next ? -1.0 - fw[*next][g.goal()] : -std::numeric_limits<double>::infinity();
  }
  auto sim = [&](VertexId u, VertexId v) {
    const double tu = -g.vertices()[u].tol, tv = -g.vertices()[v].tol;
    return -0.5 * (1.0 / tu + 1.0 / tv) * l2_distance(g.embedding(u), g.embedding(v));
  };
  std::vector<double> w(n, 0.0);
  for (VertexId v = 0; v < n; ++v) {
    std::vector<VertexId> cand{v};
    const auto nbrs = gsr::testing::exhaustive_neighbors(g.embeddings(), g.embedding_dim(), v);
    for (std::size_t i = 0; i < k && i < nbrs.size(); ++i) cand.push_back(nbrs[i].second);
    double z = 0.0;
    std::vector<double> num(cand.size());
    for (std::size_t i = 0; i < cand.size(); ++i) {
      num[i] = std::exp(beta1 * (cand[i] == v ? 0.0 : sim(cand[i], v)) + beta2 * q[cand[i]]);
      z += num[i];
    }
    if (z == 0.0) continue;
    for (std::size_t i = 0; i < cand.size(); ++i) w[cand[i]] += num[i] / z;
  }
  return w;
}

std::vector<std::vector<float>> line_rows(std::size_t steps, float x0, float y, float dx = 1.0f) {
  std::vector<std::vector<float>> rows;
  for (std::size_t s = 0; s < steps; ++s) rows.push_back({x0 + dx * static_cast<float>(s), y});
  return rows;
}

WeightTable weigh(const DemoGraph& g, ReweightConfig cfg) { return reallocate(g, compute_values(g), cfg); }

}  // namespace

TEST(NormalizedSimilarity, Examples) {
  GraphConfig gc;
  gc.stride = 1;
  gc.tol_neighbors = 1;
  const DemoGraph g = build_graph(dataset_from_rows({line_rows(3, 0, 0)}), gc);
  EXPECT_EQ(normalized_similarity(g, 1, 1), 0.0);
  EXPECT_EQ(normalized_similarity(g, 0, 1), -1.0);
  EXPECT_EQ(normalized_similarity(g, 1, 0), -1.0);
}

TEST(NormalizedSimilarity, MatchesFormulaOnRandomPairs) {
  std::mt19937_64 rng(17);
  const DemoDataset ds = random_dataset(rng, {.trajectories = 6, .min_steps = 5, .max_steps = 25, .dim = 4});
  GraphConfig gc;
  gc.stride = 2;
  const DemoGraph g = build_graph(ds, gc);
  std::uniform_int_distribution<VertexId> pick(0, static_cast<VertexId>(g.num_sources() - 1));
  for (int i = 0; i < 500; ++i) {
    const VertexId u = pick(rng), v = pick(rng);
    const double tu = std::abs(g.vertices()[u].tol), tv = std::abs(g.vertices()[v].tol);
    const double want = -(0.5 / tu + 0.5 / tv) * l2_distance(g.embedding(u), g.embedding(v));
    EXPECT_NEAR(normalized_similarity(g, u, v), want, 1e-12 * std::max(1.0, std::abs(want)));
    EXPECT_EQ(normalized_similarity(g, u, v), normalized_similarity(g, v, u));
    EXPECT_LE(normalized_similarity(g, u, v), 0.0);
  }
}

TEST(Reallocate, BcModeRecoversUnitWeights) {
  std::mt19937_64 rng(3);
  const DemoDataset ds = random_dataset(rng, {.trajectories = 5, .min_steps = 5, .max_steps = 30});
  GraphConfig gc;
  gc.stride = 3;
  const DemoGraph g = build_graph(ds, gc);
  ReweightConfig rc;
  rc.bc_mode = true;
  rc.k_retrieve = 0;
  const WeightTable wt = weigh(g, rc);
  for (double w : wt.vertex_weight) EXPECT_EQ(w, 1.0);
  for (const auto& row : wt.step_weight)
    for (double w : row) EXPECT_EQ(w, 1.0);
  const WeightStats st = weight_stats(wt.step_weight, "bc", 0, 0);
  ASSERT_EQ(st.cdf.size(), 1u);
  EXPECT_EQ(st.cdf[0], (std::pair<double, double>{1.0, 1.0}));
}

TEST(Reallocate, ZeroTemperaturesGiveUniformShares) {
  std::mt19937_64 rng(4);
  const DemoDataset ds = random_dataset(rng, {.trajectories = 4, .min_steps = 5, .max_steps = 10});
  GraphConfig gc;
  gc.stride = 1;
  const DemoGraph g = build_graph(ds, gc);
  const ValueTable vt = compute_values(g);
  ReweightConfig rc;
  rc.k_retrieve = 3;
  rc.beta1 = 0.0;
  rc.beta2 = 0.0;
  const NeighborIndex index(g.embeddings(), g.embedding_dim());
  std::vector<std::uint32_t> labels(g.num_sources(), 0);
  for (VertexId v = 0; v < g.num_sources(); ++v) {
    const Allocation a = allocate_from(g, vt, rc, index, labels, v);
    ASSERT_EQ(a.candidates.size(), 4u);
    EXPECT_EQ(a.candidates[0], v);
    for (double s : a.share) EXPECT_EQ(s, 0.25);
  }
}

TEST(Reallocate, KZeroRequiresBcMode) {
  ReweightConfig rc;
  rc.k_retrieve = 0;
  EXPECT_THROW(rc.validate(), Error);
  rc.bc_mode = true;
  EXPECT_NO_THROW(rc.validate());
  rc.beta1 = -1.0;
  EXPECT_THROW(rc.validate(), Error);
}

TEST(Reallocate, ProficientBranchOutweighsDetour) {
  // Both branches start side by side; the detour takes 6 vertices to reach
  // the goal region, the proficient branch 2.
  GraphConfig gc;
  gc.stride = 1;
  gc.tol_neighbors = 1;
  const auto detour = line_rows(6, 0, 0);
  const std::vector<std::vector<float>> proficient{{0, 0.5f}, {5, 0.5f}};
  const DemoGraph g = build_graph(dataset_from_rows({detour, proficient}), gc);
  ASSERT_LE(g.num_vertices(), 10u);
  ReweightConfig rc;
  rc.k_retrieve = 2;
  rc.beta1 = 1.0;
  rc.beta2 = 1.0;
  const WeightTable wt = weigh(g, rc);
  const VertexId detour_fork = 0, proficient_fork = 6;
  EXPECT_GT(wt.vertex_weight[proficient_fork], wt.vertex_weight[detour_fork]);
  const auto want = oracle_weights(g, rc.k_retrieve, rc.beta1, rc.beta2);
  for (VertexId v = 0; v < g.num_sources(); ++v)
    EXPECT_NEAR(wt.vertex_weight[v], want[v], 1e-12 * std::max(1.0, want[v])) << v;
}

TEST(Reallocate, MatchesDirectEvaluation) {
  std::mt19937_64 rng(808);
  for (int trial = 0; trial < 20; ++trial) {
    const DemoDataset ds = random_dataset(rng, {.trajectories = 5, .min_steps = 4, .max_steps = 15, .dim = 2});
    GraphConfig gc;
    gc.stride = 1 + trial % 2;
    gc.alpha = 1.25;
    const DemoGraph g = build_graph(ds, gc);
    ReweightConfig rc;
    rc.k_retrieve = 1 + trial % 6;
    rc.beta1 = 0.5 * (trial % 5);
    rc.beta2 = 0.25 * (trial % 4);
    const WeightTable wt = weigh(g, rc);
    const auto want = oracle_weights(g, rc.k_retrieve, rc.beta1, rc.beta2);
    for (VertexId v = 0; v < g.num_sources(); ++v)
      EXPECT_NEAR(wt.vertex_weight[v], want[v], 1e-12 * std::max(1.0, want[v])) << "trial " << trial;
  }
}

TEST(Reallocate, ConservationAndNonnegativity) {
  std::mt19937_64 rng(909);
  for (int trial = 0; trial < 20; ++trial) {
    const DemoDataset ds = random_dataset(rng, {.trajectories = 10, .min_steps = 5, .max_steps = 50, .dim = 3});
    GraphConfig gc;
    gc.stride = 1 + trial % 5;
    const DemoGraph g = build_graph(ds, gc);
    ReweightConfig rc;
    rc.k_retrieve = 1 + trial % 12;
    rc.beta1 = 0.5 + trial % 3;
    rc.beta2 = 0.25 * (1 + trial % 4);
    const WeightTable wt = weigh(g, rc);
    EXPECT_EQ(wt.active_sources, g.num_sources());
    EXPECT_NEAR(wt.total_vertex_weight(), static_cast<double>(wt.active_sources), 1e-9);
    for (double w : wt.vertex_weight) EXPECT_GE(w, 0.0);

    // Accounting identity between vertex and step weights.
    double steps = 0.0, spans = 0.0;
    for (const auto& row : wt.step_weight)
      for (double w : row) steps += w;
    for (VertexId v = 0; v < g.num_sources(); ++v) {
      const Vertex& vx = g.vertices()[v];
      spans += wt.vertex_weight[v] * static_cast<double>(vx.raw_end - vx.raw_start);
    }
    EXPECT_NEAR(steps, spans, 1e-9 * std::max(1.0, spans));
  }
}

TEST(Reallocate, FailureSourcesAllocateNothing) {
  GraphConfig gc;
  gc.stride = 1;
  const DemoGraph g =
      build_graph(dataset_from_rows({line_rows(4, 0, 0), line_rows(4, 0, 900)}, {true, false}), gc);
  ReweightConfig rc;
  rc.k_retrieve = 2;
  const WeightTable wt = weigh(g, rc);
  EXPECT_EQ(wt.active_sources, 4u);
  EXPECT_EQ(wt.empty_sources, 4u);
  EXPECT_NEAR(wt.total_vertex_weight(), 4.0, 1e-12);
  for (VertexId v = 4; v < 8; ++v) EXPECT_EQ(wt.vertex_weight[v], 0.0);
}

TEST(Reallocate, BcLimitForLargeSimilarityTemperature) {
  std::mt19937_64 rng(1001);
  const DemoDataset ds = random_dataset(rng, {.trajectories = 6, .min_steps = 5, .max_steps = 20, .dim = 3});
  GraphConfig gc;
  gc.stride = 1;
  const DemoGraph g = build_graph(ds, gc);
  double delta = std::numeric_limits<double>::infinity(), inv_tol = std::numeric_limits<double>::infinity();
  for (VertexId u = 0; u < g.num_sources(); ++u) {
    inv_tol = std::min(inv_tol, 1.0 / std::abs(g.vertices()[u].tol));
    for (VertexId v = u + 1; v < g.num_sources(); ++v)
      delta = std::min(delta, l2_distance(g.embedding(u), g.embedding(v)));
  }
  ASSERT_GT(delta, 0.0);
  ReweightConfig rc;
  rc.beta1 = 40.0 / (delta * inv_tol) * 1.01;
  rc.beta2 = 0.25;
  // Value differences can favor a neighbor by up to beta2 * max|dQ|; the
  // similarity gap beats that once beta1 adds the same margin on top.
  double q_span = 0.0;
  const ValueTable vt = compute_values(g);
  for (double q : vt.q_tilde) q_span = std::max(q_span, -1.0 - q);
  rc.beta1 += rc.beta2 * q_span / (delta * inv_tol);
  const WeightTable wt = reallocate(g, vt, rc);
  double worst = 0.0;
  for (double w : wt.vertex_weight) worst = std::max(worst, std::abs(w - 1.0));
  EXPECT_LT(worst, 1e-10);
}

TEST(Reallocate, ValueBiasMonotonicity) {
  // Two candidates mirror each other around the source, so their similarity
  // to it is equal; the one closer to the goal must receive more.
  GraphConfig gc;
  gc.stride = 1;
  gc.tol_neighbors = 1;
  const DemoGraph g = build_graph(dataset_from_rows({{{0, 0}, {0, 5}, {0, 10}},
                                                     {{-1, 0}, {-1, 30}, {-1, 31}, {-1, 32}},
                                                     {{1, 0}, {1, 30}}}),
                                  gc);
  const ValueTable vt = compute_values(g);
  const VertexId src = 0, slow = 3, fast = 7;
  ASSERT_EQ(normalized_similarity(g, slow, src), normalized_similarity(g, fast, src)) << "setup";
  ASSERT_GT(vt.q_tilde[fast], vt.q_tilde[slow]);
  const NeighborIndex index(g.embeddings(), g.embedding_dim());
  std::vector<std::uint32_t> labels(g.num_sources(), 0);
  for (double b2 : {0.01, 0.25, 1.0, 3.0}) {
    ReweightConfig rc;
    rc.k_retrieve = 2;
    rc.beta2 = b2;
    const Allocation a = allocate_from(g, vt, rc, index, labels, src);
    ASSERT_EQ(a.candidates.size(), 3u);
    double share_slow = 0, share_fast = 0;
    for (std::size_t i = 0; i < 3; ++i) {
      if (a.candidates[i] == slow) share_slow = a.share[i];
      if (a.candidates[i] == fast) share_fast = a.share[i];
    }
    EXPECT_GT(share_fast, share_slow) << b2;
  }
}

TEST(Reallocate, InvariantUnderEmbeddingScale) {
  std::mt19937_64 rng(1313);
  const DemoDataset ds = random_dataset(rng, {.trajectories = 8, .min_steps = 5, .max_steps = 30, .dim = 3});
  GraphConfig gc;
  gc.stride = 2;
  ReweightConfig rc;
  rc.beta1 = 2.0;
  rc.beta2 = 0.5;
  const WeightTable base = weigh(build_graph(ds, gc), rc);
  for (float c : {4.0f, 0.5f}) {
    std::vector<Trajectory> scaled = ds.trajectories();
    for (auto& t : scaled)
      for (auto& f : t.embeddings) f *= c;
    const WeightTable wt = weigh(build_graph(DemoDataset(3, ds.action_dim(), scaled), gc), rc);
    for (std::size_t v = 0; v < base.vertex_weight.size(); ++v)
      EXPECT_NEAR(wt.vertex_weight[v], base.vertex_weight[v], 1e-12);
  }
}

TEST(Reallocate, DeterministicAcrossThreadCounts) {
  std::mt19937_64 rng(1414);
  const DemoDataset ds = random_dataset(rng, {.trajectories = 40, .min_steps = 30, .max_steps = 80, .dim = 4});
  GraphConfig gc;
  gc.stride = 1;
  ReweightConfig rc;
  set_thread_count(1);
  const DemoGraph g1 = build_graph(ds, gc);
  const WeightTable w1 = weigh(g1, rc);
  for (std::size_t threads : {2u, 4u, 8u}) {
    set_thread_count(threads);
    const DemoGraph g = build_graph(ds, gc);
    EXPECT_EQ(g.content_hash(), g1.content_hash());
    EXPECT_EQ(weigh(g, rc).vertex_weight, w1.vertex_weight);
  }
  set_thread_count(0);
}

TEST(WeightsToSteps, SpanCopyExamples) {
  GraphConfig gc;
  gc.stride = 5;
  const DemoGraph g = build_graph(dataset_from_rows({line_rows(11, 0, 0)}), gc);
  const auto steps = weights_to_steps(g, {2.0, 0.5, 3.0});
  ASSERT_EQ(steps[0].size(), 11u);
  for (std::size_t s = 0; s < 5; ++s) EXPECT_EQ(steps[0][s], 2.0);
  for (std::size_t s = 5; s < 10; ++s) EXPECT_EQ(steps[0][s], 0.5);
  EXPECT_EQ(steps[0][10], 3.0);

  gc.stride = 1;
  const DemoGraph g1 = build_graph(dataset_from_rows({line_rows(4, 0, 0)}), gc);
  const std::vector<double> w{0.1, 0.2, 0.3, 0.4};
  EXPECT_EQ(weights_to_steps(g1, w)[0], w);
}

TEST(WeightReport, ContrastGrowsWithValueTemperature) {
  std::mt19937_64 rng(1515);
  const DemoDataset ds = random_dataset(rng, {.trajectories = 30, .min_steps = 10, .max_steps = 80, .dim = 2});
  GraphConfig gc;
  gc.stride = 1;
  const DemoGraph g = build_graph(ds, gc);
  const ValueTable vt = compute_values(g);
  double previous = -1.0;
  for (double b2 : {0.0, 0.25, 1.0}) {
    ReweightConfig rc;
    rc.beta2 = b2;
    const WeightStats st = weight_stats(reallocate(g, vt, rc).step_weight, "x", rc.beta1, b2);
    EXPECT_GT(st.contrast(), previous);
    previous = st.contrast();
  }
}

TEST(WeightReport, IdenticalConfigsGiveIdenticalReports) {
  std::mt19937_64 rng(1616);
  const DemoDataset ds = random_dataset(rng, {.trajectories = 10, .min_steps = 10, .max_steps = 40});
  const DemoGraph g = build_graph(ds, GraphConfig{});
  ReweightConfig rc;
  const auto a = weight_stats(weigh(g, rc).step_weight, "a", rc.beta1, rc.beta2);
  const auto b = weight_stats(weigh(g, rc).step_weight, "a", rc.beta1, rc.beta2);
  EXPECT_EQ(report_cdf_csv({a}), report_cdf_csv({b}));
  EXPECT_EQ(report_summary_csv({a}), report_summary_csv({b}));
  EXPECT_EQ(report_html({a}), report_html({b}));
}

TEST(WeightsCsv, RoundTrip) {
  const std::vector<std::vector<double>> w{{1.0, 0.1, 1.0 / 3.0}, {2.5, 0.0}};
  EXPECT_EQ(parse_weights_csv(weights_csv(w)), w);
  EXPECT_THROW(parse_weights_csv("traj_id,raw_index,weight\n0,1,0.5\n"), Error);
}
