#include "core/knn.hpp"

#include <algorithm>
#include <cmath>

#include "core/hash.hpp"
#include "core/metric.hpp"

namespace gsr {

namespace {

constexpr std::uint32_t kLeafSize = 12;

// Rounding slack for triangle-inequality bounds. Pruning only when the bound
// clears the threshold by this margin keeps the search exact.
inline double slack(double a, double b) { return 1e-10 * (a + b) + 1e-300; }

inline void offer(std::vector<Neighbor>& heap, std::size_t k, const Neighbor& cand) {
  if (heap.size() < k) {
    heap.push_back(cand);
    std::push_heap(heap.begin(), heap.end());
  } else if (cand < heap.front()) {
    std::pop_heap(heap.begin(), heap.end());
    heap.back() = cand;
    std::push_heap(heap.begin(), heap.end());
  }
}

}  // namespace

NeighborIndex::NeighborIndex(std::span<const float> points, std::size_t dim,
                             std::size_t brute_force_limit)
    : points_(points), dim_(dim), n_(dim == 0 ? 0 : points.size() / dim) {
  order_.resize(n_);
  for (std::uint32_t i = 0; i < n_; ++i) order_[i] = i;
  if (n_ > brute_force_limit) {
    nodes_.reserve(2 * n_ / kLeafSize + 1);
    std::vector<double> scratch(n_);
    build(0, static_cast<std::uint32_t>(n_), scratch);
  }
}

std::int32_t NeighborIndex::build(std::uint32_t lo, std::uint32_t hi, std::vector<double>& scratch) {
  const auto index = static_cast<std::int32_t>(nodes_.size());
  nodes_.emplace_back();
  if (hi - lo <= kLeafSize) {
    nodes_[index].begin = lo;
    nodes_[index].end = hi;
    return index;
  }

  // Deterministic pseudo-random vantage choice.
  const std::uint32_t pick = lo + static_cast<std::uint32_t>(mix_seed(lo, hi) % (hi - lo));
  std::swap(order_[lo], order_[pick]);
  const std::uint32_t vp = order_[lo];
  const float* vp_point = point(vp);

  std::vector<Neighbor> by_dist(hi - lo - 1);
  for (std::uint32_t i = lo + 1; i < hi; ++i) {
    by_dist[i - lo - 1] = Neighbor{l2_distance(vp_point, point(order_[i]), dim_), order_[i]};
  }
  const std::size_t half = by_dist.size() / 2;
  std::nth_element(by_dist.begin(), by_dist.begin() + static_cast<std::ptrdiff_t>(half),
                   by_dist.end());
  for (std::size_t i = 0; i < by_dist.size(); ++i) {
    order_[lo + 1 + i] = by_dist[i].id;
    scratch[lo + 1 + i] = by_dist[i].distance;
  }

  const std::uint32_t mid = lo + 1 + static_cast<std::uint32_t>(half);
  auto range = [&](std::uint32_t a, std::uint32_t b) {
    auto [mn, mx] = std::minmax_element(scratch.begin() + a, scratch.begin() + b);
    return std::pair{*mn, *mx};
  };

  Node node;
  node.vantage = vp;
  if (mid > lo + 1) std::tie(node.inner_min, node.inner_max) = range(lo + 1, mid);
  std::tie(node.outer_min, node.outer_max) = range(mid, hi);
  node.inner = mid > lo + 1 ? build(lo + 1, mid, scratch) : -1;
  node.outer = build(mid, hi, scratch);
  nodes_[index] = node;
  return index;
}

std::vector<Neighbor> NeighborIndex::knn(const float* query, std::size_t k,
                                         const Exclusion& exclude) const {
  std::vector<Neighbor> heap;
  if (k == 0 || n_ == 0) return heap;
  heap.reserve(k + 1);
  if (nodes_.empty()) {
    for (std::uint32_t i = 0; i < n_; ++i) {
      if (exclude.excludes(i)) continue;
      offer(heap, k, Neighbor{l2_distance(query, point(i), dim_), i});
    }
  } else {
    knn_node(0, query, k, exclude, heap);
  }
  std::sort_heap(heap.begin(), heap.end());
  return heap;
}

void NeighborIndex::knn_node(std::int32_t index, const float* query, std::size_t k,
                             const Exclusion& exclude, std::vector<Neighbor>& heap) const {
  const Node& node = nodes_[static_cast<std::size_t>(index)];
  if (node.inner < 0 && node.outer < 0) {
    for (std::uint32_t i = node.begin; i < node.end; ++i) {
      const std::uint32_t id = order_[i];
      if (exclude.excludes(id)) continue;
      offer(heap, k, Neighbor{l2_distance(query, point(id), dim_), id});
    }
    return;
  }

  const double dq = l2_distance(query, point(node.vantage), dim_);
  if (!exclude.excludes(node.vantage)) offer(heap, k, Neighbor{dq, node.vantage});

  auto inner_bound = [&] { return std::max(dq - node.inner_max, node.inner_min - dq); };
  auto outer_bound = [&] { return std::max(node.outer_min - dq, dq - node.outer_max); };
  auto worth = [&](double bound, double scale) {
    return heap.size() < k || bound <= heap.front().distance + slack(dq, scale);
  };

  const bool inner_first = node.inner >= 0 && inner_bound() <= outer_bound();
  if (inner_first) {
    if (worth(inner_bound(), node.inner_max)) knn_node(node.inner, query, k, exclude, heap);
    if (worth(outer_bound(), node.outer_max)) knn_node(node.outer, query, k, exclude, heap);
  } else {
    if (worth(outer_bound(), node.outer_max)) knn_node(node.outer, query, k, exclude, heap);
    if (node.inner >= 0 && worth(inner_bound(), node.inner_max)) {
      knn_node(node.inner, query, k, exclude, heap);
    }
  }
}

std::vector<Neighbor> NeighborIndex::within(const float* query, double radius) const {
  std::vector<Neighbor> out;
  if (n_ == 0 || !(radius > 0.0)) return out;
  if (nodes_.empty()) {
    for (std::uint32_t i = 0; i < n_; ++i) {
      const double d = l2_distance(query, point(i), dim_);
      if (d < radius) out.push_back(Neighbor{d, i});
    }
  } else {
    within_node(0, query, radius, out);
    std::sort(out.begin(), out.end(),
              [](const Neighbor& a, const Neighbor& b) { return a.id < b.id; });
  }
  return out;
}

void NeighborIndex::within_node(std::int32_t index, const float* query, double radius,
                                std::vector<Neighbor>& out) const {
  const Node& node = nodes_[static_cast<std::size_t>(index)];
  if (node.inner < 0 && node.outer < 0) {
    for (std::uint32_t i = node.begin; i < node.end; ++i) {
      const std::uint32_t id = order_[i];
      const double d = l2_distance(query, point(id), dim_);
      if (d < radius) out.push_back(Neighbor{d, id});
    }
    return;
  }
  const double dq = l2_distance(query, point(node.vantage), dim_);
  if (dq < radius) out.push_back(Neighbor{dq, node.vantage});
  if (node.inner >= 0) {
    const double bound = std::max(dq - node.inner_max, node.inner_min - dq);
    if (bound < radius + slack(dq, node.inner_max)) within_node(node.inner, query, radius, out);
  }
  const double bound = std::max(node.outer_min - dq, dq - node.outer_max);
  if (bound < radius + slack(dq, node.outer_max)) within_node(node.outer, query, radius, out);
}

}  // namespace gsr
