#include "core/reweight.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "core/error.hpp"
#include "core/metric.hpp"
#include "core/parallel.hpp"
#include "core/text_io.hpp"

namespace gsr {

void ReweightConfig::validate() const {
  if (!bc_mode && k_retrieve < 1) {
    fail(ErrorCode::InvalidConfig, "k_retrieve must be >= 1 (use bc_mode for K=0)");
  }
  if (!(beta1 >= 0.0) || !std::isfinite(beta1)) fail(ErrorCode::InvalidConfig, "beta1 must be finite and >= 0");
  if (!(beta2 >= 0.0) || !std::isfinite(beta2)) fail(ErrorCode::InvalidConfig, "beta2 must be finite and >= 0");
}

double WeightTable::total_vertex_weight() const {
  return std::accumulate(vertex_weight.begin(), vertex_weight.end(), 0.0);
}

double normalized_similarity(const DemoGraph& graph, VertexId u, VertexId v) {
  if (u == v) return 0.0;
  const double scale =
      0.5 * (1.0 / std::abs(graph.vertices()[u].tol) + 1.0 / std::abs(graph.vertices()[v].tol));
  return scale * similarity(graph.embedding(u), graph.embedding(v));
}

Allocation allocate_from(const DemoGraph& graph, const ValueTable& values,
                         const ReweightConfig& cfg, const NeighborIndex& index,
                         const std::vector<std::uint32_t>& traj_labels, VertexId source) {
  Allocation a;
  a.candidates.push_back(source);
  if (const std::size_t k = cfg.effective_k(); k > 0) {
    Exclusion ex;
    ex.id = source;
    if (cfg.exclude_same_trajectory) {
      ex.groups = &traj_labels;
      ex.group = traj_labels[source];
    }
    for (const Neighbor& nb : index.knn(graph.embedding(source).data(), k, ex)) {
      a.candidates.push_back(nb.id);
    }
  }

  const std::size_t m = a.candidates.size();
  a.share.assign(m, 0.0);
  std::vector<double> logit(m, kNegInfinity);
  double top = kNegInfinity;
  for (std::size_t i = 0; i < m; ++i) {
    const VertexId u = a.candidates[i];
    const double q = values.q_tilde[u];
    if (q == kNegInfinity) continue;  // zero numerator regardless of beta2
    logit[i] = cfg.beta1 * normalized_similarity(graph, u, source) + cfg.beta2 * q;
    top = std::max(top, logit[i]);
  }
  if (top == kNegInfinity) return a;

  double z = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    if (logit[i] == kNegInfinity) continue;
    a.share[i] = std::exp(logit[i] - top);
    z += a.share[i];
  }
  for (double& s : a.share) s /= z;
  return a;
}

WeightTable reallocate(const DemoGraph& graph, const ValueTable& values, const ReweightConfig& cfg) {
  cfg.validate();
  const std::size_t n = graph.num_sources();
  if (values.q_tilde.size() != n) {
    fail(ErrorCode::InvariantViolation, "value table does not match the graph");
  }

  std::vector<std::uint32_t> traj_labels(n);
  for (VertexId v = 0; v < n; ++v) traj_labels[v] = static_cast<std::uint32_t>(graph.vertices()[v].traj_id);

  const NeighborIndex index(graph.embeddings(), graph.embedding_dim());
  std::vector<Allocation> rows(n);
  parallel_for(n, [&](std::size_t v) {
    rows[v] = allocate_from(graph, values, cfg, index, traj_labels, static_cast<VertexId>(v));
  });

  // Fixed-order reduction keeps the table bit-identical for any worker count.
  WeightTable table;
  table.vertex_weight.assign(n, 0.0);
  for (std::size_t v = 0; v < n; ++v) {
    const Allocation& row = rows[v];
    bool any = false;
    for (std::size_t i = 0; i < row.candidates.size(); ++i) {
      table.vertex_weight[row.candidates[i]] += row.share[i];
      any = any || row.share[i] > 0.0;
    }
    any ? ++table.active_sources : ++table.empty_sources;
  }
  table.step_weight = weights_to_steps(graph, table.vertex_weight);
  return table;
}

std::vector<std::vector<double>> weights_to_steps(const DemoGraph& graph,
                                                  const std::vector<double>& vertex_weights) {
  if (vertex_weights.size() != graph.num_sources()) {
    fail(ErrorCode::InvariantViolation, "vertex weight table does not match the graph");
  }
  std::vector<std::vector<double>> steps(graph.num_trajectories());
  for (std::size_t t = 0; t < steps.size(); ++t) steps[t].assign(graph.raw_length(t), 0.0);
  for (VertexId v = 0; v < graph.num_sources(); ++v) {
    const Vertex& vx = graph.vertices()[v];
    auto& row = steps[static_cast<std::size_t>(vx.traj_id)];
    std::fill(row.begin() + static_cast<std::ptrdiff_t>(vx.raw_start),
              row.begin() + static_cast<std::ptrdiff_t>(vx.raw_end), vertex_weights[v]);
  }
  return steps;
}

WeightStats weight_stats(const std::vector<std::vector<double>>& step_weights, std::string label,
                         double beta1, double beta2, std::size_t max_cdf_points) {
  WeightStats s;
  s.label = std::move(label);
  s.beta1 = beta1;
  s.beta2 = beta2;
  std::vector<double> all;
  for (const auto& row : step_weights) all.insert(all.end(), row.begin(), row.end());
  s.count = all.size();
  if (all.empty()) return s;
  std::sort(all.begin(), all.end());

  const double n = static_cast<double>(all.size());
  double sum = 0.0;
  for (double w : all) sum += w;
  s.mean = sum / n;
  double sq = 0.0;
  for (double w : all) sq += (w - s.mean) * (w - s.mean);
  s.variance = sq / n;
  s.min = all.front();
  s.max = all.back();
  auto frac_where = [&](auto pred) {
    return static_cast<double>(std::count_if(all.begin(), all.end(), pred)) / n;
  };
  s.frac_below_half = frac_where([](double w) { return w < 0.5; });
  s.frac_above_1_5 = frac_where([](double w) { return w > 1.5; });
  s.frac_zero = frac_where([](double w) { return w < 1e-6; });

  const std::size_t points = std::max<std::size_t>(1, std::min(max_cdf_points, all.size()));
  for (std::size_t r = 1; r <= points; ++r) {
    const std::size_t rank = (r * all.size() + points - 1) / points;  // 1-based
    const double value = all[rank - 1];
    const auto upto = std::upper_bound(all.begin(), all.end(), value) - all.begin();
    const double p = static_cast<double>(upto) / n;
    if (!s.cdf.empty() && s.cdf.back().first == value) continue;
    s.cdf.emplace_back(value, p);
  }
  return s;
}

std::string report_cdf_csv(const std::vector<WeightStats>& stats) {
  std::string out = "label,beta1,beta2,weight,cdf\n";
  for (const auto& s : stats) {
    for (const auto& [w, p] : s.cdf) {
      out += s.label + ',' + format_double(s.beta1) + ',' + format_double(s.beta2) + ',' +
             format_double(w) + ',' + format_double(p) + '\n';
    }
  }
  return out;
}

std::string report_summary_csv(const std::vector<WeightStats>& stats) {
  std::string out =
      "label,beta1,beta2,count,mean,variance,min,max,frac_below_0.5,frac_above_1.5,frac_zero,contrast\n";
  for (const auto& s : stats) {
    out += s.label + ',' + format_double(s.beta1) + ',' + format_double(s.beta2) + ',' +
           std::to_string(s.count) + ',' + format_double(s.mean) + ',' + format_double(s.variance) +
           ',' + format_double(s.min) + ',' + format_double(s.max) + ',' +
           format_double(s.frac_below_half) + ',' + format_double(s.frac_above_1_5) + ',' +
           format_double(s.frac_zero) + ',' + format_double(s.contrast()) + '\n';
  }
  return out;
}

std::string report_html(const std::vector<WeightStats>& stats) {
  static constexpr const char* kColors[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
                                            "#9467bd", "#8c564b", "#e377c2", "#17becf"};
  double xmax = 2.0;
  for (const auto& s : stats) xmax = std::max(xmax, std::min(s.max, 5.0));
  const double width = 640, height = 360, pad = 40;
  auto px = [&](double w) { return pad + (std::min(w, xmax) / xmax) * (width - 2 * pad); };
  auto py = [&](double p) { return height - pad - p * (height - 2 * pad); };

  std::ostringstream html;
  html << "<!DOCTYPE html>\n<html><head><meta charset=\"utf-8\"><title>Step weight CDF</title>"
          "<style>body{font-family:sans-serif}td,th{padding:2px 8px;text-align:right}</style>"
          "</head><body>\n<h2>Empirical CDF of step weights</h2>\n";
  html << "<svg width=\"" << width << "\" height=\"" << height << "\" xmlns=\"http://www.w3.org/2000/svg\">\n";
  html << "<rect x=\"0\" y=\"0\" width=\"" << width << "\" height=\"" << height << "\" fill=\"white\"/>\n";
  html << "<line x1=\"" << pad << "\" y1=\"" << py(0) << "\" x2=\"" << width - pad << "\" y2=\"" << py(0)
       << "\" stroke=\"black\"/>\n";
  html << "<line x1=\"" << pad << "\" y1=\"" << py(0) << "\" x2=\"" << pad << "\" y2=\"" << py(1)
       << "\" stroke=\"black\"/>\n";
  html << "<text x=\"" << width - pad << "\" y=\"" << height - 10 << "\" text-anchor=\"end\">weight (0.." << xmax
       << ")</text>\n";
  for (std::size_t i = 0; i < stats.size(); ++i) {
    const auto& s = stats[i];
    const char* color = kColors[i % std::size(kColors)];
    html << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"" << px(0) << ','
         << py(0);
    double prev = 0.0;
    for (const auto& [w, p] : s.cdf) {
      html << ' ' << px(w) << ',' << py(prev) << ' ' << px(w) << ',' << py(p);
      prev = p;
    }
    html << ' ' << px(xmax) << ',' << py(prev) << "\"/>\n";
    html << "<text x=\"" << width - pad << "\" y=\"" << pad + 16 * static_cast<double>(i) << "\" fill=\"" << color
         << "\" text-anchor=\"end\">" << s.label << "</text>\n";
  }
  html << "</svg>\n<table><tr><th>label</th><th>beta1</th><th>beta2</th><th>mean</th><th>variance</th>"
          "<th>&lt;0.5</th><th>&gt;1.5</th><th>zero</th></tr>\n";
  for (const auto& s : stats) {
    html << "<tr><td>" << s.label << "</td><td>" << s.beta1 << "</td><td>" << s.beta2 << "</td><td>" << s.mean
         << "</td><td>" << s.variance << "</td><td>" << s.frac_below_half << "</td><td>" << s.frac_above_1_5
         << "</td><td>" << s.frac_zero << "</td></tr>\n";
  }
  html << "</table>\n</body></html>\n";
  return html.str();
}

std::string weights_csv(const std::vector<std::vector<double>>& step_weights) {
  std::string out = "traj_id,raw_index,weight\n";
  for (std::size_t t = 0; t < step_weights.size(); ++t) {
    const std::string prefix = std::to_string(t) + ',';
    for (std::size_t r = 0; r < step_weights[t].size(); ++r) {
      out += prefix;
      out += std::to_string(r);
      out += ',';
      out += format_double(step_weights[t][r]);
      out += '\n';
    }
  }
  return out;
}

std::vector<std::vector<double>> parse_weights_csv(const std::string& text) {
  std::vector<std::vector<double>> steps;
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line.rfind("traj_id,raw_index,weight", 0) != 0) {
    fail(ErrorCode::MalformedFile, "weights csv: missing header");
  }
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split(line, ',');
    std::size_t t = 0, r = 0;
    double w = 0.0;
    if (f.size() != 3 || !parse_int(f[0], t) || !parse_int(f[1], r) || !parse_double(f[2], w)) {
      fail(ErrorCode::MalformedFile, "weights csv: bad row '" + line + "'");
    }
    if (t >= steps.size()) steps.resize(t + 1);
    if (r != steps[t].size()) fail(ErrorCode::MalformedFile, "weights csv: rows out of order at '" + line + "'");
    steps[t].push_back(w);
  }
  return steps;
}

}  // namespace gsr
