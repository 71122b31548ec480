#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "core/graph.hpp"

namespace gsr {

inline constexpr double kUnreachable = std::numeric_limits<double>::infinity();
inline constexpr double kNegInfinity = -std::numeric_limits<double>::infinity();

inline bool reachable(double dist) { return dist != kUnreachable; }

struct ValueTable {
  std::vector<double> dist_to_goal;  // per vertex, goal included; kUnreachable if cut off
  std::vector<double> q_tilde;       // per non-goal vertex; kNegInfinity without a reachable successor
};

// Weighted distance from every vertex to `goal` by one reverse search: BFS
// when every weight is 1, Dijkstra otherwise.
std::vector<double> shortest_distances(std::size_t num_vertices, VertexId goal,
                                       std::span<const Edge> edges);
std::vector<double> shortest_distances(const DemoGraph& graph);

// -1 - d(successor, g) for every non-goal vertex.
std::vector<double> transition_values(const DemoGraph& graph, std::span<const double> dist);

ValueTable compute_values(const DemoGraph& graph);

enum class TabularMode { Hard, Soft };

struct TabularWeights {
  // Per non-goal vertex: weight of the (state, action) pair its transition
  // takes. 0 for transitions without a successor.
  std::vector<double> weight;
  // Exact-identity state label per non-goal vertex, and per-state goal
  // distance on the state graph.
  std::vector<std::size_t> state_of;
  std::vector<double> state_dist;
  std::size_t multi_action_states = 0;
};

// Tabular reweighting for datasets whose states recur exactly. Vertices with
// bit-identical embeddings are merged into one state; distances are taken on
// that state graph (dataset transitions, goal links and augmented edges
// between distinct states). Actions are grouped by bit-identical action
// vectors. Hard keeps every distance-minimizing action at weight 1; Soft
// assigns exp(-d(o_a, g)) / Z. Throws NotTabular when every state has a
// single candidate action.
TabularWeights tabular_weights(const DemoGraph& graph, const DemoDataset& ds, TabularMode mode);

}  // namespace gsr
