#include "core/value.hpp"

#include <algorithm>
#include <cstring>
#include <deque>
#include <map>
#include <queue>
#include <string>
#include <unordered_map>

#include "core/error.hpp"

namespace gsr {

namespace {

struct ReverseAdjacency {
  std::vector<std::size_t> offsets;  // CSR over edge targets
  std::vector<VertexId> sources;
  std::vector<double> weights;
};

ReverseAdjacency reverse_adjacency(std::size_t n, std::span<const Edge> edges) {
  ReverseAdjacency r;
  r.offsets.assign(n + 1, 0);
  for (const Edge& e : edges) ++r.offsets[e.to + 1];
  for (std::size_t i = 0; i < n; ++i) r.offsets[i + 1] += r.offsets[i];
  r.sources.resize(edges.size());
  r.weights.resize(edges.size());
  std::vector<std::size_t> fill(r.offsets.begin(), r.offsets.end() - 1);
  for (const Edge& e : edges) {
    const std::size_t slot = fill[e.to]++;
    r.sources[slot] = e.from;
    r.weights[slot] = e.weight;
  }
  return r;
}

std::string key_of(std::span<const float> v) {
  return std::string(reinterpret_cast<const char*>(v.data()), v.size() * sizeof(float));
}

}  // namespace

std::vector<double> shortest_distances(std::size_t num_vertices, VertexId goal,
                                       std::span<const Edge> edges) {
  std::vector<double> dist(num_vertices, kUnreachable);
  if (goal >= num_vertices) fail(ErrorCode::InvariantViolation, "goal vertex out of range");
  for (const Edge& e : edges) {
    if (e.from >= num_vertices || e.to >= num_vertices) {
      fail(ErrorCode::InvariantViolation, "edge endpoint out of range");
    }
    if (!(e.weight > 0.0)) fail(ErrorCode::InvariantViolation, "edge weights must be positive");
  }
  const ReverseAdjacency adj = reverse_adjacency(num_vertices, edges);
  const bool unit = std::all_of(edges.begin(), edges.end(), [](const Edge& e) { return e.weight == 1.0; });

  dist[goal] = 0.0;
  if (unit) {
    std::deque<VertexId> frontier{goal};
    while (!frontier.empty()) {
      const VertexId v = frontier.front();
      frontier.pop_front();
      for (std::size_t i = adj.offsets[v]; i < adj.offsets[v + 1]; ++i) {
        const VertexId u = adj.sources[i];
        if (dist[u] == kUnreachable) {
          dist[u] = dist[v] + 1.0;
          frontier.push_back(u);
        }
      }
    }
    return dist;
  }

  using Item = std::pair<double, VertexId>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
  heap.emplace(0.0, goal);
  while (!heap.empty()) {
    const auto [d, v] = heap.top();
    heap.pop();
    if (d > dist[v]) continue;
    for (std::size_t i = adj.offsets[v]; i < adj.offsets[v + 1]; ++i) {
      const VertexId u = adj.sources[i];
      const double cand = d + adj.weights[i];
      if (cand < dist[u]) {
        dist[u] = cand;
        heap.emplace(cand, u);
      }
    }
  }
  return dist;
}

std::vector<double> shortest_distances(const DemoGraph& graph) {
  return shortest_distances(graph.num_vertices(), graph.goal(), graph.edges());
}

std::vector<double> transition_values(const DemoGraph& graph, std::span<const double> dist) {
  if (dist.size() != graph.num_vertices()) {
    fail(ErrorCode::InvariantViolation, "distance table does not match the graph");
  }
  std::vector<double> q(graph.num_sources(), kNegInfinity);
  for (VertexId v = 0; v < graph.num_sources(); ++v) {
    if (const auto next = graph.successor(v); next && reachable(dist[*next])) {
      q[v] = -1.0 - dist[*next];
    }
  }
  return q;
}

ValueTable compute_values(const DemoGraph& graph) {
  ValueTable table;
  table.dist_to_goal = shortest_distances(graph);
  table.q_tilde = transition_values(graph, table.dist_to_goal);
  return table;
}

TabularWeights tabular_weights(const DemoGraph& graph, const DemoDataset& ds, TabularMode mode) {
  const std::size_t n = graph.num_sources();
  TabularWeights out;
  out.weight.assign(n, 0.0);
  out.state_of.resize(n);

  std::unordered_map<std::string, std::size_t> state_ids;
  for (VertexId v = 0; v < n; ++v) {
    const auto [it, inserted] = state_ids.try_emplace(key_of(graph.embedding(v)), state_ids.size());
    out.state_of[v] = it->second;
  }
  const std::size_t n_states = state_ids.size();
  const VertexId goal_state = static_cast<VertexId>(n_states);

  // State graph: one node per distinct embedding plus the goal. Edges that
  // collapse onto a single state become self-loops and are dropped.
  std::map<std::pair<VertexId, VertexId>, double> best;
  for (const Edge& e : graph.edges()) {
    const VertexId a = static_cast<VertexId>(out.state_of[e.from]);
    const VertexId b = e.to == graph.goal() ? goal_state : static_cast<VertexId>(out.state_of[e.to]);
    if (a == b) continue;
    auto [it, inserted] = best.try_emplace({a, b}, e.weight);
    if (!inserted) it->second = std::min(it->second, e.weight);
  }
  std::vector<Edge> state_edges;
  state_edges.reserve(best.size());
  for (const auto& [ab, w] : best) state_edges.push_back(Edge{ab.first, ab.second, w, EdgeKind::Dataset});
  out.state_dist = shortest_distances(n_states + 1, goal_state, state_edges);

  // Successor-state distance of each vertex's own transition.
  std::vector<double> succ_dist(n, kUnreachable);
  for (VertexId v = 0; v < n; ++v) {
    if (const auto next = graph.successor(v)) {
      succ_dist[v] = *next == graph.goal() ? out.state_dist[goal_state]
                                            : out.state_dist[out.state_of[*next]];
    }
  }

  // Group transitions by state, then by exact action.
  std::vector<std::vector<VertexId>> members(n_states);
  for (VertexId v = 0; v < n; ++v) {
    if (graph.successor(v)) members[out.state_of[v]].push_back(v);
  }
  for (std::size_t s = 0; s < n_states; ++s) {
    std::map<std::string, double> action_dist;  // best successor distance per action
    std::vector<std::string> action_of(members[s].size());
    for (std::size_t i = 0; i < members[s].size(); ++i) {
      const Vertex& vx = graph.vertices()[members[s][i]];
      action_of[i] = key_of(ds.step(static_cast<std::size_t>(vx.traj_id), vx.raw_start).action);
      auto [it, inserted] = action_dist.try_emplace(action_of[i], succ_dist[members[s][i]]);
      if (!inserted) it->second = std::min(it->second, succ_dist[members[s][i]]);
    }
    if (action_dist.size() >= 2) ++out.multi_action_states;

    double best_dist = kUnreachable;
    for (const auto& [a, d] : action_dist) best_dist = std::min(best_dist, d);
    if (!reachable(best_dist)) continue;

    if (mode == TabularMode::Hard) {
      for (std::size_t i = 0; i < members[s].size(); ++i) {
        out.weight[members[s][i]] = action_dist[action_of[i]] == best_dist ? 1.0 : 0.0;
      }
    } else {
      // exp(-d) / Z, shifted by the minimum distance for stability.
      double z = 0.0;
      for (const auto& [a, d] : action_dist) z += std::exp(-(d - best_dist));
      for (std::size_t i = 0; i < members[s].size(); ++i) {
        out.weight[members[s][i]] = std::exp(-(action_dist[action_of[i]] - best_dist)) / z;
      }
    }
  }
  if (out.multi_action_states == 0) {
    fail(ErrorCode::NotTabular,
         "no state has more than one candidate action; tabular weighting degenerates to BC");
  }
  return out;
}

}  // namespace gsr
