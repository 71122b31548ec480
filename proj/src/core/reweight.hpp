#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "core/graph.hpp"
#include "core/knn.hpp"
#include "core/value.hpp"

namespace gsr {

struct ReweightConfig {
  std::size_t k_retrieve = 10;
  double beta1 = 1.0;  // similarity temperature
  double beta2 = 0.25; // value temperature
  // K = 0 is only legal here: every vertex keeps its own unit weight.
  bool bc_mode = false;
  // Drop candidates from the source's own trajectory (off by default).
  bool exclude_same_trajectory = false;

  void validate() const;
  std::size_t effective_k() const { return bc_mode ? 0 : k_retrieve; }
};

struct WeightTable {
  std::vector<double> vertex_weight;            // per non-goal vertex
  std::vector<std::vector<double>> step_weight; // [traj][raw_index]
  std::size_t active_sources = 0;               // sources that allocated their unit
  std::size_t empty_sources = 0;                // sources with no finite-value candidate

  double total_vertex_weight() const;
};

// S(u, v) = 1/2 (1/|Tol u| + 1/|Tol v|) * sim(f_u, f_v), nonpositive.
double normalized_similarity(const DemoGraph& graph, VertexId u, VertexId v);

// One source's retrieval candidates and their allocation shares.
struct Allocation {
  std::vector<VertexId> candidates;  // v first, then neighbors by (distance, id)
  std::vector<double> share;         // sums to 1, or all 0 for an empty source
};

Allocation allocate_from(const DemoGraph& graph, const ValueTable& values,
                         const ReweightConfig& cfg, const NeighborIndex& index,
                         const std::vector<std::uint32_t>& traj_labels, VertexId source);

// Vertex weights by retrieval reallocation, then raw-step weights.
WeightTable reallocate(const DemoGraph& graph, const ValueTable& values, const ReweightConfig& cfg);

// Every raw step inherits the weight of the vertex whose span contains it.
std::vector<std::vector<double>> weights_to_steps(const DemoGraph& graph,
                                                  const std::vector<double>& vertex_weights);

struct WeightStats {
  std::string label;
  double beta1 = 0.0, beta2 = 0.0;
  std::size_t count = 0;
  double mean = 0.0, variance = 0.0;
  double min = 0.0, max = 0.0;
  double frac_below_half = 0.0;  // weight < 0.5
  double frac_above_1_5 = 0.0;   // weight > 1.5
  double frac_zero = 0.0;        // weight < 1e-6
  // Empirical CDF as (value, P[w <= value]) at distinct sample values,
  // thinned to at most `max_cdf_points` evenly spaced ranks.
  std::vector<std::pair<double, double>> cdf;

  // Share of samples away from weight 1 (below 0.5 or above 1.5).
  double contrast() const { return frac_below_half + frac_above_1_5; }
};

WeightStats weight_stats(const std::vector<std::vector<double>>& step_weights, std::string label,
                         double beta1, double beta2, std::size_t max_cdf_points = 200);

// Long-format CDF table (label,beta1,beta2,weight,cdf) and a one-row-per-
// configuration summary table.
std::string report_cdf_csv(const std::vector<WeightStats>& stats);
std::string report_summary_csv(const std::vector<WeightStats>& stats);
std::string report_html(const std::vector<WeightStats>& stats);

// (traj_id, raw_index, weight) rows with header.
std::string weights_csv(const std::vector<std::vector<double>>& step_weights);
std::vector<std::vector<double>> parse_weights_csv(const std::string& text);

}  // namespace gsr
