#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "sme/graph.hpp"

namespace sme {

// All-pairs hop counts. Stored dense row-major as uint32 with an explicit
// sentinel for unreachable pairs.
class DistanceMatrix {
 public:
  static constexpr std::uint32_t kInfinity = 0xFFFFFFFFu;

  DistanceMatrix() = default;
  explicit DistanceMatrix(NodeId n)
      : n_(n), entries_(static_cast<std::size_t>(n) * n, kInfinity) {}

  NodeId num_nodes() const { return n_; }

  std::uint32_t at(NodeId u, NodeId v) const {
    return entries_[static_cast<std::size_t>(u) * n_ + v];
  }
  void set(NodeId u, NodeId v, std::uint32_t d) {
    entries_[static_cast<std::size_t>(u) * n_ + v] = d;
  }
  bool is_infinite(NodeId u, NodeId v) const { return at(u, v) == kInfinity; }

  const std::vector<std::uint32_t>& entries() const { return entries_; }

  std::uint32_t* row(NodeId u) { return entries_.data() + static_cast<std::size_t>(u) * n_; }
  const std::uint32_t* row(NodeId u) const {
    return entries_.data() + static_cast<std::size_t>(u) * n_;
  }

 private:
  NodeId n_ = 0;
  std::vector<std::uint32_t> entries_;
};

inline constexpr NodeId kDefaultApspNodeLimit = 8192;

// Exact unweighted directed hop counts via one BFS per source. Throws
// capacity_error when n exceeds max_nodes (use sampled mode instead).
DistanceMatrix all_pairs_shortest_paths(const DirectedGraph& g,
                                        NodeId max_nodes = kDefaultApspNodeLimit,
                                        unsigned threads = 0);

// Single-source hop counts (kInfinity where unreachable); follow_out = false
// walks in-edges instead, giving d(v, source).
std::vector<std::uint32_t> bfs_distances(const DirectedGraph& g, NodeId source,
                                         bool follow_out = true);

// Binary format: magic "SMD1", little-endian u64 node count, then n^2
// little-endian u32 entries row-major, 0xFFFFFFFF = infinity.
void save_distance_matrix(const DistanceMatrix& d, const std::string& path);
DistanceMatrix load_distance_matrix(const std::string& path);

// CSV export: n rows of n comma-separated entries, "inf" for infinity.
void save_distance_matrix_csv(const DistanceMatrix& d, const std::string& path);

}  // namespace sme
