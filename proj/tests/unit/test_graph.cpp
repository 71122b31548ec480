#include <gtest/gtest.h>

#include <random>
#include <set>
#include <tuple>

#include "core/error.hpp"
#include "core/graph.hpp"
#include "core/knn.hpp"
#include "core/metric.hpp"
#include "support.hpp"

using namespace gsr;
using gsr::testing::dataset_from_rows;
using gsr::testing::random_dataset;

namespace {

std::vector<std::vector<float>> line_rows(std::size_t steps, float spacing = 1.0f, float offset = 0.0f) {
  std::vector<std::vector<float>> rows;
  for (std::size_t s = 0; s < steps; ++s) rows.push_back({offset + spacing * static_cast<float>(s)});
  return rows;
}

// Reference Tol_raw and Tol from first principles over a vertex embedding
// table: exhaustive neighbor ordering, mean anchored at v.
std::pair<std::vector<double>, std::vector<double>> oracle_tolerances(const DemoGraph& g, std::size_t m,
                                                                      double eps) {
  const std::size_t n = g.num_sources();
  const std::size_t dim = g.embedding_dim();
  auto dist = [&](std::size_t a, std::size_t b) {
    return l2_distance(g.embedding(static_cast<VertexId>(a)), g.embedding(static_cast<VertexId>(b)));
  };
  std::vector<double> raw(n), tol(n);
  for (std::size_t v = 0; v < n; ++v) {
    std::vector<double> sims;
    const auto& vx = g.vertices()[v];
    if (v > 0 && g.vertices()[v - 1].traj_id == vx.traj_id) sims.push_back(-dist(v, v - 1));
    if (v + 1 < n && g.vertices()[v + 1].traj_id == vx.traj_id) sims.push_back(-dist(v, v + 1));
    raw[v] = *std::min_element(sims.begin(), sims.end());
  }
  for (std::size_t v = 0; v < n; ++v) {
    const auto nbrs = gsr::testing::exhaustive_neighbors(g.embeddings(), dim, static_cast<std::uint32_t>(v));
    double sum = raw[v];
    std::size_t count = 1;
    for (std::size_t i = 0; i + 1 < m && i < nbrs.size(); ++i) {
      sum += raw[nbrs[i].second];
      ++count;
    }
    const double mean = sum / static_cast<double>(count);
    tol[v] = std::min(mean, -eps);
  }
  return {raw, tol};
}

using PairSet = std::set<std::pair<VertexId, VertexId>>;

PairSet augmented_pairs(const DemoGraph& g) {
  PairSet out;
  for (const Edge& e : g.edges())
    if (e.kind == EdgeKind::Augmented) out.emplace(e.from, e.to);
  return out;
}

// Exhaustive all-pairs check of the connectivity criterion, stated in its
// similarity form: sim(u, v) > alpha * max(Tol u, Tol v).
PairSet oracle_augmented(const DemoGraph& g, double alpha) {
  PairSet dataset;
  for (const Edge& e : g.edges())
    if (e.kind == EdgeKind::Dataset) dataset.emplace(std::min(e.from, e.to), std::max(e.from, e.to));
  PairSet out;
  const std::size_t n = g.num_sources();
  for (VertexId u = 0; u < n; ++u) {
    for (VertexId v = 0; v < n; ++v) {
      if (u == v || dataset.count({std::min(u, v), std::max(u, v)})) continue;
      const double sim = -l2_distance(g.embedding(u), g.embedding(v));
      if (sim > alpha * std::max(g.vertices()[u].tol, g.vertices()[v].tol)) out.emplace(u, v);
    }
  }
  return out;
}

std::vector<std::size_t> vertex_raw_starts(const DemoGraph& g, std::size_t traj) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < g.vertex_count(traj); ++i) out.push_back(g.vertices()[g.first_vertex(traj) + i].raw_start);
  return out;
}

}  // namespace

TEST(BuildVertices, StrideExamples) {
  GraphConfig cfg;
  cfg.stride = 5;
  {
    const DemoGraph g = build_graph(dataset_from_rows({line_rows(11)}), cfg);
    EXPECT_EQ(vertex_raw_starts(g, 0), (std::vector<std::size_t>{0, 5, 10}));
    EXPECT_EQ(g.num_vertices(), 4u);
    EXPECT_TRUE(g.vertices().back().is_goal);
  }
  {
    const DemoGraph g = build_graph(dataset_from_rows({line_rows(8)}), cfg);
    EXPECT_EQ(vertex_raw_starts(g, 0), (std::vector<std::size_t>{0, 5, 7}));
  }
  cfg.stride = 1;
  const DemoGraph g = build_graph(dataset_from_rows({line_rows(6)}), cfg);
  EXPECT_EQ(vertex_raw_starts(g, 0), (std::vector<std::size_t>{0, 1, 2, 3, 4, 5}));
}

TEST(BuildVertices, SpansPartitionEveryTrajectory) {
  // Enumerate every (T, n) pair on a small grid and verify by marking each raw
  // step with the vertices that own it.
  for (std::size_t t_max = 1; t_max <= 23; ++t_max) {
    for (std::size_t n = 1; n <= 9; ++n) {
      GraphConfig cfg;
      cfg.stride = n;
      const DemoDataset ds = dataset_from_rows({line_rows(t_max + 1)});
      const auto vertices = build_vertices(ds, cfg);
      std::vector<int> owners(t_max + 1, 0);
      std::size_t prev_end = 0;
      for (const Vertex& v : vertices) {
        if (v.is_goal) continue;
        EXPECT_EQ(v.raw_start, prev_end);
        EXPECT_EQ(v.raw_start, std::min(v.index * n, t_max));
        EXPECT_LT(v.raw_start, v.raw_end);
        EXPECT_LE(v.raw_end - v.raw_start, n);
        for (std::size_t s = v.raw_start; s < v.raw_end; ++s) ++owners.at(s);
        prev_end = v.raw_end;
      }
      for (std::size_t s = 0; s <= t_max; ++s) EXPECT_EQ(owners[s], 1) << "T=" << t_max << " n=" << n << " s=" << s;
      // The terminal observation always anchors the last vertex.
      EXPECT_EQ(vertices[vertices.size() - 2].raw_start, t_max);
      EXPECT_EQ(std::count_if(vertices.begin(), vertices.end(), [](const Vertex& v) { return v.is_goal; }), 1);
    }
  }
}

TEST(Tolerances, CollinearAndBoundaryExamples) {
  GraphConfig cfg;
  cfg.stride = 1;
  cfg.tol_neighbors = 1;
  const DemoGraph g = build_graph(dataset_from_rows({line_rows(3)}), cfg);
  EXPECT_EQ(g.vertices()[1].tol_raw, -1.0);
  EXPECT_EQ(g.vertices()[1].tol, -1.0);

  const DemoGraph b = build_graph(dataset_from_rows({{{0.0f}, {2.0f}, {2.5f}}}), cfg);
  EXPECT_EQ(b.vertices()[0].tol_raw, -2.0);
  EXPECT_EQ(b.vertices()[2].tol_raw, -0.5);
  EXPECT_EQ(b.vertices()[1].tol_raw, -2.0);
}

TEST(Tolerances, MatchExhaustiveOracleExactly) {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 25; ++trial) {
    gsr::testing::RandomDatasetSpec spec;
    spec.trajectories = 5;
    spec.min_steps = 6;
    spec.max_steps = 6;  // 30 vertices at stride 1
    spec.dim = 2 + trial % 3;
    DemoDataset ds = random_dataset(rng, spec);
    GraphConfig cfg;
    cfg.stride = 1;
    cfg.tol_neighbors = 5;
    const DemoGraph g = build_graph(ds, cfg);
    ASSERT_EQ(g.num_sources(), 30u);
    const auto [raw, tol] = oracle_tolerances(g, 5, cfg.tol_floor_eps);
    for (std::size_t v = 0; v < 30; ++v) {
      EXPECT_EQ(g.vertices()[v].tol_raw, raw[v]) << "vertex " << v;
      EXPECT_EQ(g.vertices()[v].tol, tol[v]) << "vertex " << v;
      EXPECT_LE(g.vertices()[v].tol, 0.0);
      EXPECT_LE(g.vertices()[v].tol_raw, 0.0);
    }
  }
}

TEST(Tolerances, LargeDatasetUsesTreeAndStillMatches) {
  std::mt19937_64 rng(99);
  gsr::testing::RandomDatasetSpec spec;
  spec.trajectories = 60;
  spec.min_steps = 40;
  spec.max_steps = 60;
  spec.dim = 4;
  const DemoDataset ds = random_dataset(rng, spec);
  GraphConfig cfg;
  cfg.stride = 1;
  const DemoGraph g = build_graph(ds, cfg);
  ASSERT_GT(g.num_sources(), NeighborIndex::kDefaultBruteForceLimit);
  const auto [raw, tol] = oracle_tolerances(g, cfg.tol_neighbors, cfg.tol_floor_eps);
  for (std::size_t v = 0; v < g.num_sources(); ++v) ASSERT_EQ(g.vertices()[v].tol, tol[v]) << v;
  EXPECT_EQ(augmented_pairs(g), oracle_augmented(g, cfg.alpha));
}

TEST(Tolerances, CoincidentFramesHitTheFloor) {
  GraphConfig cfg;
  cfg.stride = 1;
  cfg.tol_neighbors = 1;
  const DemoGraph g = build_graph(dataset_from_rows({{{1.0f}, {1.0f}, {1.0f}}}), cfg);
  EXPECT_EQ(g.degenerate_vertices(), 3u);
  for (std::size_t v = 0; v < 3; ++v) EXPECT_EQ(g.vertices()[v].tol, -cfg.tol_floor_eps);
}

TEST(AugmentedEdges, ThresholdExamples) {
  // Two single-trajectory chains; vertex tolerances are pinned by spacing 1
  // and M = 1, so |Tol| = 1 everywhere.
  GraphConfig cfg;
  cfg.stride = 1;
  cfg.tol_neighbors = 1;
  {
    const DemoGraph g = build_graph(dataset_from_rows({{{0, 0}, {1, 0}}, {{0, 0.5f}, {1, 0.5f}}}), cfg);
    EXPECT_EQ(g.vertices()[0].tol, -1.0);
    EXPECT_EQ(augmented_pairs(g), (PairSet{{0, 2}, {2, 0}, {1, 3}, {3, 1}}));
  }
  {
    const DemoGraph g = build_graph(dataset_from_rows({{{0, 0}, {1, 0}}, {{0, 1.2f}, {1, 1.2f}}}), cfg);
    EXPECT_TRUE(augmented_pairs(g).empty());
  }
}

TEST(AugmentedEdges, MatchExhaustiveOracle) {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 30; ++trial) {
    gsr::testing::RandomDatasetSpec spec;
    spec.trajectories = 5;
    spec.min_steps = 10;
    spec.max_steps = 10;  // 50 vertices
    spec.dim = 2;
    spec.walk_step = 0.2;
    const DemoDataset ds = random_dataset(rng, spec);
    GraphConfig cfg;
    cfg.stride = 1;
    cfg.tol_neighbors = 1 + trial % 6;
    const DemoGraph g = build_graph(ds, cfg);
    ASSERT_EQ(g.num_sources(), 50u);
    EXPECT_EQ(augmented_pairs(g), oracle_augmented(g, 1.0)) << "trial " << trial;
  }
}

TEST(BuildGraph, ChainExample) {
  GraphConfig cfg;
  cfg.stride = 1;
  const DemoGraph g = build_graph(dataset_from_rows({line_rows(3)}), cfg);
  const std::vector<Edge> want{{0, 1, 1.0, EdgeKind::Dataset}, {1, 2, 1.0, EdgeKind::Dataset},
                               {2, 3, 1.0, EdgeKind::GoalLink}};
  EXPECT_EQ(g.edges(), want);
  EXPECT_EQ(g.goal(), 3u);
}

TEST(BuildGraph, IdenticalTrajectoriesConnectAlignedPairs) {
  GraphConfig cfg;
  cfg.stride = 2;
  const auto rows = line_rows(9, 0.7f);
  const DemoGraph g = build_graph(dataset_from_rows({rows, rows}), cfg);
  const std::size_t per = g.vertex_count(0);
  ASSERT_EQ(per, 5u);
  const PairSet aug = augmented_pairs(g);
  for (VertexId i = 0; i < per; ++i) {
    EXPECT_TRUE(aug.count({i, static_cast<VertexId>(per + i)}));
    EXPECT_TRUE(aug.count({static_cast<VertexId>(per + i), i}));
  }
}

TEST(BuildGraph, FailureTrajectoryGetsNoGoalLink) {
  GraphConfig cfg;
  cfg.stride = 1;
  const DemoGraph g =
      build_graph(dataset_from_rows({line_rows(3), line_rows(3, 1.0f, 100.0f)}, {true, false}), cfg);
  EXPECT_EQ(g.count_edges(EdgeKind::GoalLink), 1u);
  EXPECT_FALSE(g.successor(5).has_value());
  EXPECT_EQ(g.successor(2), g.goal());
}

TEST(BuildGraph, StructuralInvariants) {
  std::mt19937_64 rng(5150);
  for (int trial = 0; trial < 20; ++trial) {
    gsr::testing::RandomDatasetSpec spec;
    spec.trajectories = 6;
    spec.min_steps = 5;
    spec.max_steps = 30;
    spec.dim = 3;
    const DemoDataset ds = random_dataset(rng, spec);
    GraphConfig cfg;
    cfg.stride = 1 + trial % 4;
    cfg.alpha = 0.5 + 0.25 * (trial % 5);
    const DemoGraph g = build_graph(ds, cfg);

    std::vector<std::size_t> out_degree(g.num_vertices(), 0);
    std::set<std::tuple<VertexId, VertexId, int>> seen;
    for (const Edge& e : g.edges()) {
      ++out_degree[e.from];
      EXPECT_NE(e.from, e.to);
      EXPECT_GT(e.weight, 0.0);
      EXPECT_TRUE(seen.emplace(e.from, e.to, static_cast<int>(e.kind)).second);
      if (e.kind == EdgeKind::Dataset) EXPECT_EQ(e.weight, 1.0);
      if (e.kind == EdgeKind::GoalLink) EXPECT_EQ(e.to, g.goal());
    }
    for (VertexId v = 0; v < g.num_sources(); ++v) EXPECT_GE(out_degree[v], 1u);
    EXPECT_EQ(out_degree[g.goal()], 0u);

    const PairSet aug = augmented_pairs(g);
    for (const auto& [u, v] : aug) EXPECT_TRUE(aug.count({v, u}));
  }
}

TEST(BuildGraph, AlphaMonotonicity) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 10; ++trial) {
    const DemoDataset ds = random_dataset(rng, {.trajectories = 8, .min_steps = 10, .max_steps = 25, .dim = 2});
    PairSet previous;
    for (double alpha : {0.25, 0.5, 1.0, 1.25, 2.0, 4.0}) {
      GraphConfig cfg;
      cfg.stride = 2;
      cfg.alpha = alpha;
      const PairSet current = augmented_pairs(build_graph(ds, cfg));
      EXPECT_TRUE(std::includes(current.begin(), current.end(), previous.begin(), previous.end()));
      previous = current;
    }
  }
}

TEST(BuildGraph, ScaleInvariance) {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 10; ++trial) {
    const DemoDataset ds = random_dataset(rng, {.trajectories = 6, .min_steps = 8, .max_steps = 20, .dim = 3});
    GraphConfig cfg;
    cfg.stride = 1;
    const DemoGraph base = build_graph(ds, cfg);
    // Powers of two scale every float exactly, so the edge set must match
    // bit for bit; other factors may only move pairs sitting on the boundary.
    for (float c : {2.0f, 0.25f, 3.0f}) {
      std::vector<Trajectory> scaled = ds.trajectories();
      for (auto& t : scaled)
        for (auto& f : t.embeddings) f *= c;
      const DemoGraph g = build_graph(DemoDataset(ds.embedding_dim(), ds.action_dim(), scaled), cfg);
      if (c == 3.0f) {
        for (const auto& [u, v] : augmented_pairs(g)) {
          const double margin = std::abs(l2_distance(g.embedding(u), g.embedding(v)) -
                                         cfg.alpha * std::min(-g.vertices()[u].tol, -g.vertices()[v].tol));
          if (!augmented_pairs(base).count({u, v})) EXPECT_LT(margin, 1e-5);
        }
        EXPECT_NEAR(static_cast<double>(augmented_pairs(g).size()),
                    static_cast<double>(augmented_pairs(base).size()), 2.0);
      } else {
        EXPECT_EQ(augmented_pairs(g), augmented_pairs(base));
        for (std::size_t v = 0; v < g.num_sources(); ++v)
          EXPECT_EQ(g.vertices()[v].tol, c * base.vertices()[v].tol);
      }
    }
  }
}

TEST(BuildGraph, DeterministicContentHash) {
  std::mt19937_64 rng(12);
  const DemoDataset ds = random_dataset(rng, {.trajectories = 20, .min_steps = 20, .max_steps = 60, .dim = 5});
  GraphConfig cfg;
  const DemoGraph a = build_graph(ds, cfg);
  const DemoGraph b = build_graph(ds, cfg);
  EXPECT_EQ(a.edges(), b.edges());
  EXPECT_EQ(a.content_hash(), b.content_hash());
}

TEST(GraphConfig, RejectsInvalidValues) {
  GraphConfig cfg;
  cfg.stride = 0;
  EXPECT_THROW(cfg.validate(), Error);
  cfg = GraphConfig{};
  cfg.tol_neighbors = 0;
  EXPECT_THROW(cfg.validate(), Error);
  cfg = GraphConfig{};
  cfg.alpha = -1.0;
  EXPECT_THROW(cfg.validate(), Error);
  cfg = GraphConfig{};
  cfg.augmented_edge_weight = 0.0;
  EXPECT_THROW(cfg.validate(), Error);
}

TEST(GraphExport, RoundTrip) {
  std::mt19937_64 rng(4);
  const DemoDataset ds = random_dataset(rng, {.trajectories = 5, .min_steps = 6, .max_steps = 30, .dim = 3});
  const auto dir = gsr::testing::temp_dir("graph_export");
  save_dataset(ds, dir / "ds.gsrd");
  GraphConfig cfg;
  cfg.stride = 3;
  cfg.alpha = 1.25;
  cfg.augmented_edge_weight = 0.75;
  const DemoGraph g = build_graph(ds, cfg);
  export_graph(g, dir / "graph", dir / "ds.gsrd");
  const ImportedGraph back = import_graph(dir / "graph");
  EXPECT_EQ(back.graph.edges(), g.edges());
  EXPECT_EQ(back.graph.content_hash(), g.content_hash());
  EXPECT_EQ(back.graph.config().alpha, 1.25);
  EXPECT_EQ(back.dataset, ds);
  for (std::size_t v = 0; v < g.num_sources(); ++v) {
    EXPECT_EQ(back.graph.vertices()[v].tol, g.vertices()[v].tol);
    EXPECT_EQ(back.graph.vertices()[v].raw_end, g.vertices()[v].raw_end);
  }

  // A different dataset at the same path must be detected.
  const DemoDataset other = random_dataset(rng, {.trajectories = 5, .min_steps = 6, .max_steps = 30, .dim = 3});
  save_dataset(other, dir / "ds.gsrd");
  try {
    import_graph(dir / "graph");
    FAIL() << "expected StructureMismatch";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::StructureMismatch);
  }
}
