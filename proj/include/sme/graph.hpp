#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <unordered_map>
#include <vector>

namespace sme {

using NodeId = std::uint32_t;

// Immutable directed graph. Node ids are dense in [0, n); external labels
// from parsed edge lists are kept in label_of / id_of.
class DirectedGraph {
 public:
  DirectedGraph() = default;

  // Builds from an edge list over dense ids. Deduplicates, drops self-loops,
  // sorts adjacency. Labels default to the identity mapping.
  static DirectedGraph from_edges(NodeId n, std::vector<std::pair<NodeId, NodeId>> edges,
                                  std::vector<std::int64_t> labels = {});

  NodeId num_nodes() const { return n_; }
  std::size_t num_edges() const { return m_; }

  const std::vector<NodeId>& out_neighbors(NodeId u) const { return out_adj_[u]; }
  const std::vector<NodeId>& in_neighbors(NodeId u) const { return in_adj_[u]; }
  NodeId out_degree(NodeId u) const { return static_cast<NodeId>(out_adj_[u].size()); }
  NodeId in_degree(NodeId u) const { return static_cast<NodeId>(in_adj_[u].size()); }

  bool has_edge(NodeId u, NodeId v) const;

  std::int64_t label_of(NodeId u) const { return labels_[u]; }
  const std::vector<std::int64_t>& labels() const { return labels_; }

  // All edges as (u, v) pairs ordered by (u, v).
  std::vector<std::pair<NodeId, NodeId>> edges() const;

 private:
  NodeId n_ = 0;
  std::size_t m_ = 0;
  std::vector<std::vector<NodeId>> out_adj_;
  std::vector<std::vector<NodeId>> in_adj_;
  std::vector<std::int64_t> labels_;
};

// Parses whitespace-separated edge-list text (KONECT compatible). Lines
// starting with '%' or '#' are comments; the first two tokens of a data line
// are integer node labels, extra columns are ignored. Labels are remapped to
// dense ids in order of first appearance.
DirectedGraph parse_edge_list(std::istream& in);
DirectedGraph parse_edge_list_string(const std::string& text);
DirectedGraph load_edge_list_file(const std::string& path);

// Writes one "label label" line per edge.
void serialize_edge_list(const DirectedGraph& g, std::ostream& out);
void save_edge_list_file(const DirectedGraph& g, const std::string& path);

// The deterministic 25-node, 30-edge example network: five 5-node blocks,
// two source blocks feed the center block, the center feeds two sink blocks.
DirectedGraph generate_toy_graph();

// G(n, p) directed: each ordered pair (u, v), u != v, kept with probability p.
DirectedGraph generate_erdos_renyi(NodeId n, double p, std::uint64_t seed);

class DistanceMatrix;  // distance.hpp

struct GraphStats {
  NodeId n_nodes = 0;
  std::size_t n_edges = 0;
  double infinite_ratio = 0.0;  // |{(u,v): d=inf}| / n^2, over all ordered pairs
  double reciprocity = 0.0;     // fraction of edges whose reverse edge exists
};

GraphStats graph_stats(const DirectedGraph& g, const DistanceMatrix& d);

}  // namespace sme
