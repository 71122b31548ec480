#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

namespace gsr {

struct Neighbor {
  double distance = 0.0;
  std::uint32_t id = 0;

  friend bool operator<(const Neighbor& a, const Neighbor& b) {
    return a.distance < b.distance || (a.distance == b.distance && a.id < b.id);
  }
  friend bool operator==(const Neighbor&, const Neighbor&) = default;
};

// Points dropped from a query: a single id (usually the query itself) and,
// optionally, every point whose group label equals `group`.
struct Exclusion {
  static constexpr std::uint32_t kNone = std::numeric_limits<std::uint32_t>::max();
  std::uint32_t id = kNone;
  const std::vector<std::uint32_t>* groups = nullptr;
  std::uint32_t group = kNone;

  bool excludes(std::uint32_t candidate) const {
    return candidate == id || (groups != nullptr && (*groups)[candidate] == group);
  }
};

// Exact nearest-neighbor search under the engine's L2 metric. Results are
// ordered by (distance, id), so equidistant points resolve to ascending id.
// Small point sets are scanned exhaustively; larger ones use a vantage-point
// tree, which adapts to the intrinsic dimension of embedding clouds.
class NeighborIndex {
 public:
  static constexpr std::size_t kDefaultBruteForceLimit = 2048;

  // `points` is row-major (n x dim) and must outlive the index.
  NeighborIndex(std::span<const float> points, std::size_t dim,
                std::size_t brute_force_limit = kDefaultBruteForceLimit);

  std::size_t size() const { return n_; }
  std::size_t dim() const { return dim_; }
  bool uses_tree() const { return !nodes_.empty(); }
  const float* point(std::uint32_t id) const { return points_.data() + std::size_t{id} * dim_; }

  // The k smallest (distance, id) pairs among non-excluded points, ascending.
  std::vector<Neighbor> knn(const float* query, std::size_t k, const Exclusion& exclude = {}) const;

  // Every point with distance strictly below `radius`, ascending by id.
  std::vector<Neighbor> within(const float* query, double radius) const;

 private:
  struct Node {
    std::uint32_t vantage = 0;
    std::int32_t inner = -1;
    std::int32_t outer = -1;
    double inner_min = 0.0, inner_max = 0.0;
    double outer_min = 0.0, outer_max = 0.0;
    // Leaf bucket [begin, end) into order_ when inner == outer == -1.
    std::uint32_t begin = 0, end = 0;
  };

  std::int32_t build(std::uint32_t lo, std::uint32_t hi, std::vector<double>& scratch);
  void knn_node(std::int32_t node, const float* query, std::size_t k, const Exclusion& exclude,
                std::vector<Neighbor>& heap) const;
  void within_node(std::int32_t node, const float* query, double radius,
                   std::vector<Neighbor>& out) const;

  std::span<const float> points_;
  std::size_t dim_ = 0;
  std::size_t n_ = 0;
  std::vector<std::uint32_t> order_;
  std::vector<Node> nodes_;
};

}  // namespace gsr
