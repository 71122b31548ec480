#pragma once

// Test-only helpers: random dataset generators and exhaustive reference
// implementations used as oracles. Nothing here calls into the
// index-accelerated code paths it is used to check.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "core/dataset.hpp"
#include "core/graph.hpp"
#include "core/metric.hpp"

namespace gsr::testing {

inline std::filesystem::path temp_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("gsr_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

// Trajectories as lists of per-step embedding rows; actions are a single
// float holding the step index.
inline DemoDataset dataset_from_rows(const std::vector<std::vector<std::vector<float>>>& trajs,
                                     std::vector<bool> success = {}) {
  std::vector<Trajectory> out;
  std::size_t dim = trajs.at(0).at(0).size();
  for (std::size_t t = 0; t < trajs.size(); ++t) {
    Trajectory tr;
    for (std::size_t s = 0; s < trajs[t].size(); ++s) {
      tr.embeddings.insert(tr.embeddings.end(), trajs[t][s].begin(), trajs[t][s].end());
      tr.actions.push_back(static_cast<float>(s));
    }
    tr.success = success.empty() ? true : success[t];
    out.push_back(std::move(tr));
  }
  return DemoDataset(dim, 1, std::move(out));
}

struct RandomDatasetSpec {
  std::size_t trajectories = 4;
  std::size_t min_steps = 2;
  std::size_t max_steps = 12;
  std::size_t dim = 3;
  std::size_t action_dim = 2;
  // Random walks with this step scale; 0 gives iid uniform points.
  double walk_step = 0.3;
};

inline DemoDataset random_dataset(std::mt19937_64& rng, const RandomDatasetSpec& spec = {}) {
  std::uniform_int_distribution<std::size_t> len(spec.min_steps, spec.max_steps);
  std::uniform_real_distribution<float> unit(-1.0f, 1.0f);
  std::vector<Trajectory> trajs(spec.trajectories);
  for (auto& t : trajs) {
    const std::size_t n = len(rng);
    std::vector<float> pos(spec.dim);
    for (auto& p : pos) p = unit(rng);
    for (std::size_t s = 0; s < n; ++s) {
      for (std::size_t d = 0; d < spec.dim; ++d) {
        if (spec.walk_step > 0) {
          pos[d] += static_cast<float>(spec.walk_step) * unit(rng);
        } else {
          pos[d] = unit(rng);
        }
      }
      t.embeddings.insert(t.embeddings.end(), pos.begin(), pos.end());
      for (std::size_t a = 0; a < spec.action_dim; ++a) t.actions.push_back(unit(rng));
    }
  }
  return DemoDataset(spec.dim, spec.action_dim, std::move(trajs));
}

// All-pairs shortest paths on the directed graph; returns d(i, j).
inline std::vector<std::vector<double>> floyd_warshall(std::size_t n, const std::vector<Edge>& edges) {
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<std::vector<double>> d(n, std::vector<double>(n, inf));
  for (std::size_t i = 0; i < n; ++i) d[i][i] = 0.0;
  for (const Edge& e : edges) d[e.from][e.to] = std::min(d[e.from][e.to], e.weight);
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (d[i][k] + d[k][j] < d[i][j]) d[i][j] = d[i][k] + d[k][j];
  return d;
}

// Exhaustive nearest-neighbor list of `v` among rows [0, n): sorted by
// (distance, id), self excluded.
inline std::vector<std::pair<double, std::uint32_t>> exhaustive_neighbors(
    std::span<const float> rows, std::size_t dim, std::uint32_t v) {
  const std::size_t n = rows.size() / dim;
  std::vector<std::pair<double, std::uint32_t>> all;
  for (std::uint32_t u = 0; u < n; ++u) {
    if (u == v) continue;
    all.emplace_back(l2_distance(rows.data() + std::size_t{u} * dim, rows.data() + std::size_t{v} * dim, dim), u);
  }
  std::sort(all.begin(), all.end());
  return all;
}

}  // namespace gsr::testing
