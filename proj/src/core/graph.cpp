#include "core/graph.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "json.hpp"

#include "core/error.hpp"
#include "core/hash.hpp"
#include "core/knn.hpp"
#include "core/metric.hpp"
#include "core/parallel.hpp"
#include "core/text_io.hpp"

namespace gsr {

namespace {

void invariant(bool ok, const std::string& what) {
  if (!ok) fail(ErrorCode::InvariantViolation, what);
}

bool dataset_adjacent(const Vertex& a, const Vertex& b) {
  return a.traj_id == b.traj_id && (a.index + 1 == b.index || b.index + 1 == a.index);
}

constexpr const char* kGraphFormat = "gsr-graph";

}  // namespace

void GraphConfig::validate() const {
  if (stride < 1) fail(ErrorCode::InvalidConfig, "stride must be >= 1");
  if (tol_neighbors < 1) fail(ErrorCode::InvalidConfig, "tol_neighbors (M) must be >= 1");
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) {
    fail(ErrorCode::InvalidConfig, "alpha must be finite and >= 0");
  }
  if (!(augmented_edge_weight > 0.0) || !std::isfinite(augmented_edge_weight)) {
    fail(ErrorCode::InvalidConfig, "augmented_edge_weight must be finite and > 0");
  }
  if (!(tol_floor_eps > 0.0) || !std::isfinite(tol_floor_eps)) {
    fail(ErrorCode::InvalidConfig, "tol_floor_eps must be finite and > 0");
  }
}

const char* edge_kind_name(EdgeKind kind) {
  switch (kind) {
    case EdgeKind::Dataset: return "dataset";
    case EdgeKind::Augmented: return "augmented";
    case EdgeKind::GoalLink: return "goal";
  }
  return "?";
}

std::optional<EdgeKind> parse_edge_kind(std::string_view name) {
  if (name == "dataset") return EdgeKind::Dataset;
  if (name == "augmented") return EdgeKind::Augmented;
  if (name == "goal") return EdgeKind::GoalLink;
  return std::nullopt;
}

bool edge_less(const Edge& a, const Edge& b) {
  if (a.from != b.from) return a.from < b.from;
  if (a.to != b.to) return a.to < b.to;
  return a.kind < b.kind;
}

DemoGraph DemoGraph::assemble(const GraphConfig& cfg, std::size_t dim, std::vector<Vertex> vertices,
                              std::vector<float> embeddings, std::vector<std::uint8_t> traj_success,
                              std::vector<Edge> edges, std::uint64_t dataset_fingerprint,
                              std::size_t degenerate) {
  invariant(!vertices.empty() && vertices.back().is_goal, "goal vertex must be last");
  const std::size_t n_src = vertices.size() - 1;
  invariant(embeddings.size() == n_src * dim, "embedding table size mismatch");

  DemoGraph g;
  g.config_ = cfg;
  g.dim_ = dim;
  g.dataset_fingerprint_ = dataset_fingerprint;
  g.degenerate_ = degenerate;

  for (std::size_t i = 0; i < vertices.size(); ++i) {
    const Vertex& v = vertices[i];
    invariant(v.id == i, "vertex ids must be 0..V-1 in order");
    if (i == n_src) break;
    invariant(!v.is_goal, "only the last vertex may be the goal");
    invariant(v.tol_raw <= 0.0 && v.tol <= 0.0, "tolerances must be nonpositive");
    invariant(v.raw_start < v.raw_end, "vertex " + std::to_string(i) + " has an empty raw span");
    const bool starts_traj = i == 0 || vertices[i - 1].traj_id != v.traj_id;
    if (starts_traj) {
      invariant(v.traj_id == static_cast<std::int64_t>(g.traj_first_.size()),
                "trajectories must appear contiguously in order");
      invariant(v.index == 0 && v.raw_start == 0, "trajectory must start at raw index 0");
      g.traj_first_.push_back(static_cast<VertexId>(i));
      g.traj_count_.push_back(0);
    } else {
      const Vertex& prev = vertices[i - 1];
      invariant(v.index == prev.index + 1 && v.raw_start == prev.raw_end,
                "raw spans must tile the trajectory");
    }
    ++g.traj_count_.back();
  }
  invariant(traj_success.size() == g.traj_first_.size(), "success flags per trajectory mismatch");

  for (const Edge& e : edges) {
    invariant(e.from < vertices.size() && e.to < vertices.size(), "edge endpoint out of range");
    invariant(e.from != e.to, "self-loop edge");
    invariant(e.weight > 0.0 && std::isfinite(e.weight), "edge weight must be positive");
    invariant(e.from != n_src, "goal vertex has no outgoing edges");
  }
  std::sort(edges.begin(), edges.end(), edge_less);
  for (std::size_t i = 1; i < edges.size(); ++i) {
    invariant(edge_less(edges[i - 1], edges[i]), "duplicate (from, to, kind) edge");
  }

  g.vertices_ = std::move(vertices);
  g.edges_ = std::move(edges);
  g.embeddings_ = std::move(embeddings);
  g.traj_success_ = std::move(traj_success);
  return g;
}

std::size_t DemoGraph::raw_length(std::size_t traj) const {
  const VertexId last = traj_first_[traj] + static_cast<VertexId>(traj_count_[traj]) - 1;
  return vertices_[last].raw_end;
}

std::optional<VertexId> DemoGraph::successor(VertexId v) const {
  const Vertex& vx = vertices_[v];
  if (vx.is_goal) return std::nullopt;
  const auto t = static_cast<std::size_t>(vx.traj_id);
  if (vx.index + 1 < traj_count_[t]) return v + 1;
  if (traj_success_[t]) return goal();
  return std::nullopt;
}

std::size_t DemoGraph::count_edges(EdgeKind kind) const {
  return static_cast<std::size_t>(
      std::count_if(edges_.begin(), edges_.end(), [kind](const Edge& e) { return e.kind == kind; }));
}

std::uint64_t DemoGraph::content_hash() const {
  Fnv1a64 h;
  for (const Vertex& v : vertices_) {
    h.update_value(v.id);
    h.update_value(v.traj_id);
    h.update_value(static_cast<std::uint64_t>(v.raw_start));
    h.update_value(static_cast<std::uint64_t>(v.raw_end));
    h.update_value(v.tol_raw);
    h.update_value(v.tol);
  }
  for (const Edge& e : edges_) {
    h.update_value(e.from);
    h.update_value(e.to);
    h.update_value(e.weight);
    h.update_value(static_cast<std::uint8_t>(e.kind));
  }
  return h.digest();
}

std::vector<Vertex> build_vertices(const DemoDataset& ds, const GraphConfig& cfg) {
  cfg.validate();
  std::vector<Vertex> vertices;
  const std::size_t n = cfg.stride;
  for (std::size_t t = 0; t < ds.num_trajectories(); ++t) {
    const std::size_t steps = ds.num_steps(t);  // T + 1
    const std::size_t last = steps - 1;         // T
    std::vector<std::size_t> starts;
    for (std::size_t r = 0; r <= last; r += n) starts.push_back(r);
    if (starts.back() != last) starts.push_back(last);
    for (std::size_t i = 0; i < starts.size(); ++i) {
      Vertex v;
      v.id = static_cast<VertexId>(vertices.size());
      v.traj_id = static_cast<std::int64_t>(t);
      v.index = i;
      v.raw_start = starts[i];
      v.raw_end = i + 1 < starts.size() ? starts[i + 1] : steps;
      vertices.push_back(v);
    }
  }
  Vertex goal;
  goal.id = static_cast<VertexId>(vertices.size());
  goal.is_goal = true;
  vertices.push_back(goal);
  return vertices;
}

ToleranceResult compute_tolerances(const std::vector<Vertex>& vertices,
                                   std::span<const float> embeddings, std::size_t dim,
                                   const GraphConfig& cfg) {
  cfg.validate();
  std::size_t n = vertices.size();
  if (n > 0 && vertices.back().is_goal) --n;
  if (embeddings.size() != n * dim) {
    fail(ErrorCode::InvariantViolation, "compute_tolerances: embedding table size mismatch");
  }
  auto row = [&](std::size_t v) { return embeddings.data() + v * dim; };

  ToleranceResult out;
  out.tol_raw.assign(n, 0.0);
  out.tol.assign(n, 0.0);

  // Tol_raw: the farther of the available temporal neighbors, negated.
  for (std::size_t v = 0; v < n; ++v) {
    double farthest = 0.0;
    if (v > 0 && vertices[v - 1].traj_id == vertices[v].traj_id) {
      farthest = std::max(farthest, l2_distance(row(v), row(v - 1), dim));
    }
    if (v + 1 < n && vertices[v + 1].traj_id == vertices[v].traj_id) {
      farthest = std::max(farthest, l2_distance(row(v), row(v + 1), dim));
    }
    out.tol_raw[v] = -farthest;
    if (farthest == 0.0) ++out.degenerate;
  }

  // Tol: mean of Tol_raw over v and its M-1 nearest other vertices, summed in
  // (distance, id) order after v itself.
  const NeighborIndex index(embeddings, dim);
  const std::size_t others = cfg.tol_neighbors - 1;
  parallel_for(n, [&](std::size_t v) {
    double sum = out.tol_raw[v];
    std::size_t count = 1;
    if (others > 0) {
      Exclusion self;
      self.id = static_cast<std::uint32_t>(v);
      for (const Neighbor& nb : index.knn(row(v), others, self)) {
        sum += out.tol_raw[nb.id];
        ++count;
      }
    }
    const double mean = sum / static_cast<double>(count);
    out.tol[v] = -std::max(-mean, cfg.tol_floor_eps);
  });
  return out;
}

std::vector<Edge> build_augmented_edges(const std::vector<Vertex>& vertices,
                                        std::span<const float> embeddings, std::size_t dim,
                                        const GraphConfig& cfg) {
  cfg.validate();
  std::size_t n = vertices.size();
  if (n > 0 && vertices.back().is_goal) --n;
  if (embeddings.size() != n * dim) {
    fail(ErrorCode::InvariantViolation, "build_augmented_edges: embedding table size mismatch");
  }
  if (cfg.alpha == 0.0 || n < 2) return {};

  const NeighborIndex index(embeddings, dim);
  std::vector<std::vector<VertexId>> partners(n);
  parallel_for(n, [&](std::size_t u) {
    const double tol_u = std::abs(vertices[u].tol);
    const float* fu = embeddings.data() + u * dim;
    for (const Neighbor& nb : index.within(fu, cfg.alpha * tol_u)) {
      const std::size_t v = nb.id;
      if (v <= u || dataset_adjacent(vertices[u], vertices[v])) continue;
      const double bound = cfg.alpha * std::min(tol_u, std::abs(vertices[v].tol));
      if (nb.distance < bound) partners[u].push_back(static_cast<VertexId>(v));
    }
  });

  std::vector<Edge> edges;
  for (std::size_t u = 0; u < n; ++u) {
    for (VertexId v : partners[u]) {
      edges.push_back(Edge{static_cast<VertexId>(u), v, cfg.augmented_edge_weight, EdgeKind::Augmented});
      edges.push_back(Edge{v, static_cast<VertexId>(u), cfg.augmented_edge_weight, EdgeKind::Augmented});
    }
  }
  std::sort(edges.begin(), edges.end(), edge_less);
  return edges;
}

DemoGraph build_graph(const DemoDataset& ds, const GraphConfig& cfg) {
  cfg.validate();
  DatasetOptions structural;
  structural.allow_failures = true;
  ds.validate(structural);
  std::vector<Vertex> vertices = build_vertices(ds, cfg);
  const std::size_t n_src = vertices.size() - 1;
  const std::size_t dim = ds.embedding_dim();

  std::vector<float> embeddings;
  embeddings.reserve(n_src * dim);
  for (std::size_t v = 0; v < n_src; ++v) {
    const auto e = ds.embedding(static_cast<std::size_t>(vertices[v].traj_id), vertices[v].raw_start);
    embeddings.insert(embeddings.end(), e.begin(), e.end());
  }

  const ToleranceResult tol = compute_tolerances(vertices, embeddings, dim, cfg);
  for (std::size_t v = 0; v < n_src; ++v) {
    vertices[v].tol_raw = tol.tol_raw[v];
    vertices[v].tol = tol.tol[v];
  }

  std::vector<std::uint8_t> success(ds.num_trajectories());
  for (std::size_t t = 0; t < ds.num_trajectories(); ++t) success[t] = ds.trajectory(t).success;

  const VertexId goal = static_cast<VertexId>(n_src);
  std::vector<Edge> edges;
  for (std::size_t v = 0; v < n_src; ++v) {
    const bool last = v + 1 == n_src || vertices[v + 1].traj_id != vertices[v].traj_id;
    if (!last) {
      edges.push_back(Edge{static_cast<VertexId>(v), static_cast<VertexId>(v + 1), 1.0, EdgeKind::Dataset});
    } else if (success[static_cast<std::size_t>(vertices[v].traj_id)]) {
      edges.push_back(Edge{static_cast<VertexId>(v), goal, 1.0, EdgeKind::GoalLink});
    }
  }
  auto augmented = build_augmented_edges(vertices, embeddings, dim, cfg);
  edges.insert(edges.end(), augmented.begin(), augmented.end());

  return DemoGraph::assemble(cfg, dim, std::move(vertices), std::move(embeddings),
                             std::move(success), std::move(edges), ds.fingerprint(),
                             tol.degenerate);
}

void export_graph(const DemoGraph& graph, const std::filesystem::path& dir,
                  const std::filesystem::path& dataset_path) {
  ensure_directory(dir);

  std::string edges;
  edges.reserve(graph.edges().size() * 24);
  for (const Edge& e : graph.edges()) {
    edges += std::to_string(e.from);
    edges += ' ';
    edges += std::to_string(e.to);
    edges += ' ';
    edges += format_double(e.weight);
    edges += ' ';
    edges += edge_kind_name(e.kind);
    edges += '\n';
  }
  write_text_file(dir / "edges.txt", edges);

  std::string table = "id,traj_id,raw_start,raw_end,tol,index,tol_raw,is_goal\n";
  for (const Vertex& v : graph.vertices()) {
    table += std::to_string(v.id);
    if (v.is_goal) {
      table += ",-1,,,,,,1\n";
      continue;
    }
    table += ',' + std::to_string(v.traj_id) + ',' + std::to_string(v.raw_start) + ',' +
             std::to_string(v.raw_end) + ',' + format_double(v.tol) + ',' +
             std::to_string(v.index) + ',' + format_double(v.tol_raw) + ",0\n";
  }
  write_text_file(dir / "vertices.csv", table);

  const GraphConfig& cfg = graph.config();
  nlohmann::ordered_json meta;
  meta["format"] = kGraphFormat;
  meta["version"] = 1;
  meta["dataset"] = std::filesystem::absolute(dataset_path).lexically_normal().string();
  meta["dataset_fingerprint"] = hex64(graph.dataset_fingerprint());
  meta["config"] = {{"stride", cfg.stride},
                    {"tol_neighbors", cfg.tol_neighbors},
                    {"alpha", cfg.alpha},
                    {"augmented_edge_weight", cfg.augmented_edge_weight},
                    {"tol_floor_eps", cfg.tol_floor_eps}};
  meta["num_vertices"] = graph.num_vertices();
  meta["num_edges"] = graph.edges().size();
  meta["edge_counts"] = {{"dataset", graph.count_edges(EdgeKind::Dataset)},
                         {"augmented", graph.count_edges(EdgeKind::Augmented)},
                         {"goal", graph.count_edges(EdgeKind::GoalLink)}};
  meta["degenerate_vertices"] = graph.degenerate_vertices();
  meta["content_hash"] = hex64(graph.content_hash());
  write_text_file(dir / "graph.json", meta.dump(2) + "\n");
}

ImportedGraph import_graph(const std::filesystem::path& dir) {
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(read_text_file(dir / "graph.json"));
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::MalformedFile, "graph.json: " + std::string(e.what()));
  }
  auto malformed = [&](const std::string& what) {
    fail(ErrorCode::MalformedFile, (dir / what).string());
  };

  ImportedGraph out;
  GraphConfig cfg;
  try {
    if (meta.at("format") != kGraphFormat || meta.at("version") != 1) malformed("graph.json: unknown format");
    out.dataset_path = meta.at("dataset").get<std::string>();
    const auto& c = meta.at("config");
    cfg.stride = c.at("stride").get<std::size_t>();
    cfg.tol_neighbors = c.at("tol_neighbors").get<std::size_t>();
    cfg.alpha = c.at("alpha").get<double>();
    cfg.augmented_edge_weight = c.at("augmented_edge_weight").get<double>();
    cfg.tol_floor_eps = c.at("tol_floor_eps").get<double>();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::MalformedFile, "graph.json: " + std::string(e.what()));
  }

  DatasetOptions options;
  options.allow_failures = true;
  out.dataset = load_dataset(out.dataset_path, options);
  if (hex64(out.dataset.fingerprint()) != meta["dataset_fingerprint"].get<std::string>()) {
    fail(ErrorCode::StructureMismatch,
         "dataset " + out.dataset_path.string() + " changed since the graph was exported");
  }

  std::vector<Vertex> vertices;
  {
    const std::string text = read_text_file(dir / "vertices.csv");
    std::istringstream in(text);
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const auto f = split(line, ',');
      if (f.size() != 8) malformed("vertices.csv: expected 8 columns");
      Vertex v;
      int is_goal = 0;
      if (!parse_int(f[0], v.id) || !parse_int(f[1], v.traj_id) || !parse_int(f[7], is_goal)) {
        malformed("vertices.csv: bad row '" + line + "'");
      }
      v.is_goal = is_goal != 0;
      if (!v.is_goal &&
          (!parse_int(f[2], v.raw_start) || !parse_int(f[3], v.raw_end) ||
           !parse_double(f[4], v.tol) || !parse_int(f[5], v.index) || !parse_double(f[6], v.tol_raw))) {
        malformed("vertices.csv: bad row '" + line + "'");
      }
      vertices.push_back(v);
    }
  }

  std::vector<Edge> edges;
  {
    const std::string text = read_text_file(dir / "edges.txt");
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const auto f = split(line, ' ');
      Edge e;
      std::optional<EdgeKind> kind;
      if (f.size() != 4 || !parse_int(f[0], e.from) || !parse_int(f[1], e.to) ||
          !parse_double(f[2], e.weight) || !(kind = parse_edge_kind(f[3]))) {
        malformed("edges.txt: bad row '" + line + "'");
      }
      e.kind = *kind;
      edges.push_back(e);
    }
  }

  if (vertices.empty()) malformed("vertices.csv: no vertices");
  const std::size_t dim = out.dataset.embedding_dim();
  std::vector<float> embeddings;
  embeddings.reserve((vertices.size() - 1) * dim);
  for (std::size_t v = 0; v + 1 < vertices.size(); ++v) {
    const auto t = static_cast<std::size_t>(vertices[v].traj_id);
    if (vertices[v].traj_id < 0 || t >= out.dataset.num_trajectories() ||
        vertices[v].raw_start >= out.dataset.num_steps(t)) {
      malformed("vertices.csv: vertex " + std::to_string(v) + " outside dataset");
    }
    const auto e = out.dataset.embedding(t, vertices[v].raw_start);
    embeddings.insert(embeddings.end(), e.begin(), e.end());
  }
  std::vector<std::uint8_t> success(out.dataset.num_trajectories());
  for (std::size_t t = 0; t < success.size(); ++t) success[t] = out.dataset.trajectory(t).success;

  const std::size_t degenerate = meta.value("degenerate_vertices", std::size_t{0});
  out.graph = DemoGraph::assemble(cfg, dim, std::move(vertices), std::move(embeddings),
                                  std::move(success), std::move(edges), out.dataset.fingerprint(),
                                  degenerate);
  if (out.graph.num_trajectories() != out.dataset.num_trajectories()) {
    fail(ErrorCode::StructureMismatch, "graph and dataset disagree on trajectory count");
  }
  return out;
}

}  // namespace gsr
