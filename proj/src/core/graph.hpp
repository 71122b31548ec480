#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "core/dataset.hpp"

namespace gsr {

struct GraphConfig {
  std::size_t stride = 5;          // subsample every n-th observation
  std::size_t tol_neighbors = 10;  // M: tolerance smoothing neighborhood, self included
  double alpha = 1.0;              // connectivity scale on the tolerance
  double augmented_edge_weight = 1.0;
  double tol_floor_eps = 1e-9;     // |Tol| never drops below this

  void validate() const;
};

using VertexId = std::uint32_t;

struct Vertex {
  VertexId id = 0;
  std::int64_t traj_id = -1;
  std::size_t index = 0;      // position along the subsampled trajectory
  std::size_t raw_start = 0;  // owned raw steps: [raw_start, raw_end)
  std::size_t raw_end = 0;
  double tol_raw = 0.0;       // nonpositive
  double tol = 0.0;           // nonpositive, |tol| >= tol_floor_eps
  bool is_goal = false;
};

enum class EdgeKind : std::uint8_t { Dataset = 0, Augmented = 1, GoalLink = 2 };

const char* edge_kind_name(EdgeKind kind);
std::optional<EdgeKind> parse_edge_kind(std::string_view name);

struct Edge {
  VertexId from = 0;
  VertexId to = 0;
  double weight = 1.0;
  EdgeKind kind = EdgeKind::Dataset;

  friend bool operator==(const Edge&, const Edge&) = default;
};

// Canonical edge order: (from, to, kind).
bool edge_less(const Edge& a, const Edge& b);

// Vertices are numbered trajectory by trajectory in temporal order; the
// virtual goal is always the last vertex.
class DemoGraph {
 public:
  DemoGraph() = default;

  // Builds a graph from explicit parts and checks every structural invariant
  // (contiguous per-trajectory ids, goal last, span partition, edge validity,
  // no self-loops or duplicate (from, to, kind)). Edges are sorted
  // canonically. Throws InvariantViolation.
  static DemoGraph assemble(const GraphConfig& cfg, std::size_t dim, std::vector<Vertex> vertices,
                            std::vector<float> embeddings, std::vector<std::uint8_t> traj_success,
                            std::vector<Edge> edges, std::uint64_t dataset_fingerprint = 0,
                            std::size_t degenerate = 0);

  const GraphConfig& config() const { return config_; }
  const std::vector<Vertex>& vertices() const { return vertices_; }
  const std::vector<Edge>& edges() const { return edges_; }
  std::size_t embedding_dim() const { return dim_; }

  std::size_t num_vertices() const { return vertices_.size(); }
  // Non-goal vertices occupy ids [0, num_sources()).
  std::size_t num_sources() const { return vertices_.empty() ? 0 : vertices_.size() - 1; }
  VertexId goal() const { return static_cast<VertexId>(vertices_.size() - 1); }
  std::size_t num_trajectories() const { return traj_first_.size(); }

  // Row-major (num_sources x D) vertex embeddings.
  std::span<const float> embeddings() const { return embeddings_; }
  std::span<const float> embedding(VertexId v) const {
    return std::span<const float>(embeddings_).subspan(std::size_t{v} * dim_, dim_);
  }

  // Vertex ids of trajectory t: [first_vertex(t), first_vertex(t) + vertex_count(t)).
  VertexId first_vertex(std::size_t traj) const { return traj_first_[traj]; }
  std::size_t vertex_count(std::size_t traj) const { return traj_count_[traj]; }
  bool trajectory_success(std::size_t traj) const { return traj_success_[traj] != 0; }
  // Raw step count (T + 1) of trajectory t.
  std::size_t raw_length(std::size_t traj) const;

  // Dataset successor of v: v+1 inside its trajectory, the goal for the last
  // vertex of a success trajectory, nothing otherwise.
  std::optional<VertexId> successor(VertexId v) const;

  std::uint64_t dataset_fingerprint() const { return dataset_fingerprint_; }
  // Vertices whose raw tolerance was zero (coincident temporal neighbors).
  std::size_t degenerate_vertices() const { return degenerate_; }

  std::size_t count_edges(EdgeKind kind) const;
  // FNV-1a over vertices and canonical edge list.
  std::uint64_t content_hash() const;

 private:
  GraphConfig config_;
  std::size_t dim_ = 0;
  std::vector<Vertex> vertices_;
  std::vector<Edge> edges_;
  std::vector<float> embeddings_;
  std::vector<VertexId> traj_first_;
  std::vector<std::size_t> traj_count_;
  std::vector<std::uint8_t> traj_success_;
  std::uint64_t dataset_fingerprint_ = 0;
  std::size_t degenerate_ = 0;
};

// Subsamples raw indices 0, n, 2n, ... per trajectory and always keeps o_T;
// appends the goal vertex. Tolerances are left at zero.
std::vector<Vertex> build_vertices(const DemoDataset& ds, const GraphConfig& cfg);

struct ToleranceResult {
  std::vector<double> tol_raw;
  std::vector<double> tol;
  std::size_t degenerate = 0;
};

// `embeddings` holds one row per non-goal vertex; `vertices` supplies the
// trajectory structure (goal vertex, if present, is ignored).
ToleranceResult compute_tolerances(const std::vector<Vertex>& vertices,
                                   std::span<const float> embeddings, std::size_t dim,
                                   const GraphConfig& cfg);

// Augmented pairs (u < v) satisfying ||f_u - f_v|| < alpha * min(|Tol u|, |Tol v|)
// and not already joined by a dataset edge. Returned as both directions,
// sorted canonically.
std::vector<Edge> build_augmented_edges(const std::vector<Vertex>& vertices,
                                        std::span<const float> embeddings, std::size_t dim,
                                        const GraphConfig& cfg);

DemoGraph build_graph(const DemoDataset& ds, const GraphConfig& cfg);

// Directory export: edges.txt, vertices.csv, graph.json.
void export_graph(const DemoGraph& graph, const std::filesystem::path& dir,
                  const std::filesystem::path& dataset_path);

struct ImportedGraph {
  DemoGraph graph;
  DemoDataset dataset;
  std::filesystem::path dataset_path;
};

// Reads an export back. The referenced dataset is reloaded and its
// fingerprint checked; embeddings are taken from it.
ImportedGraph import_graph(const std::filesystem::path& dir);

}  // namespace gsr
