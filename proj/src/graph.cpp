#include "sme/graph.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include "sme/distance.hpp"
#include "sme/errors.hpp"
#include "sme/rng.hpp"

namespace sme {

DirectedGraph DirectedGraph::from_edges(NodeId n, std::vector<std::pair<NodeId, NodeId>> edges,
                                        std::vector<std::int64_t> labels) {
  DirectedGraph g;
  g.n_ = n;
  g.out_adj_.assign(n, {});
  g.in_adj_.assign(n, {});
  if (labels.empty()) {
    g.labels_.resize(n);
    for (NodeId u = 0; u < n; ++u) g.labels_[u] = static_cast<std::int64_t>(u);
  } else {
    if (labels.size() != n) throw validation_error("label table size does not match node count");
    g.labels_ = std::move(labels);
  }

  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  for (const auto& [u, v] : edges) {
    if (u >= n || v >= n) throw validation_error("edge endpoint out of range");
    if (u == v) continue;  // no self-loops
    g.out_adj_[u].push_back(v);
    g.in_adj_[v].push_back(u);
    ++g.m_;
  }
  for (auto& a : g.out_adj_) std::sort(a.begin(), a.end());
  for (auto& a : g.in_adj_) std::sort(a.begin(), a.end());
  return g;
}

bool DirectedGraph::has_edge(NodeId u, NodeId v) const {
  const auto& a = out_adj_[u];
  return std::binary_search(a.begin(), a.end(), v);
}

std::vector<std::pair<NodeId, NodeId>> DirectedGraph::edges() const {
  std::vector<std::pair<NodeId, NodeId>> e;
  e.reserve(m_);
  for (NodeId u = 0; u < n_; ++u)
    for (NodeId v : out_adj_[u]) e.emplace_back(u, v);
  return e;
}

DirectedGraph parse_edge_list(std::istream& in) {
  std::unordered_map<std::int64_t, NodeId> id_of;
  std::vector<std::int64_t> labels;
  std::vector<std::pair<NodeId, NodeId>> edges;

  auto intern = [&](std::int64_t label) -> NodeId {
    auto it = id_of.find(label);
    if (it != id_of.end()) return it->second;
    NodeId id = static_cast<NodeId>(labels.size());
    id_of.emplace(label, id);
    labels.push_back(label);
    return id;
  };

  std::string line;
  std::size_t line_no = 0;
  bool saw_data = false;
  while (std::getline(in, line)) {
    ++line_no;
    std::size_t start = line.find_first_not_of(" \t\r");
    if (start == std::string::npos) continue;
    if (line[start] == '%' || line[start] == '#') continue;

    std::istringstream ls(line.substr(start));
    std::string tok_u, tok_v;
    if (!(ls >> tok_u >> tok_v)) {
      throw validation_error("line " + std::to_string(line_no) + ": expected two node labels");
    }
    std::int64_t lu = 0, lv = 0;
    auto parse_int = [&](const std::string& tok, std::int64_t& out) {
      auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), out);
      if (ec != std::errc{} || ptr != tok.data() + tok.size()) {
        throw validation_error("line " + std::to_string(line_no) + ": bad node label '" + tok +
                               "'");
      }
    };
    parse_int(tok_u, lu);
    parse_int(tok_v, lv);
    saw_data = true;
    edges.emplace_back(intern(lu), intern(lv));
  }
  if (!saw_data) throw validation_error("edge list is empty");
  return DirectedGraph::from_edges(static_cast<NodeId>(labels.size()), std::move(edges),
                                   std::move(labels));
}

DirectedGraph parse_edge_list_string(const std::string& text) {
  std::istringstream in(text);
  return parse_edge_list(in);
}

DirectedGraph load_edge_list_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw validation_error("cannot open graph file: " + path);
  return parse_edge_list(in);
}

void serialize_edge_list(const DirectedGraph& g, std::ostream& out) {
  for (const auto& [u, v] : g.edges()) {
    out << g.label_of(u) << ' ' << g.label_of(v) << '\n';
  }
}

void save_edge_list_file(const DirectedGraph& g, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw validation_error("cannot write graph file: " + path);
  serialize_edge_list(g, out);
}

DirectedGraph generate_toy_graph() {
  // Five blocks of five nodes (block b = nodes 5b..5b+4), each a directed
  // 5-cycle. Blocks 0 and 1 feed the center block 2, block 2 feeds the sink
  // blocks 3 and 4; the center carries one reciprocated chord. 30 edges.
  std::vector<std::pair<NodeId, NodeId>> edges;
  for (NodeId b = 0; b < 5; ++b) {
    for (NodeId i = 0; i < 5; ++i) {
      edges.emplace_back(5 * b + i, 5 * b + (i + 1) % 5);
    }
  }
  edges.emplace_back(11, 10);  // reciprocated chord in the center block
  edges.emplace_back(0, 10);   // source block 0 -> center
  edges.emplace_back(5, 11);   // source block 1 -> center
  edges.emplace_back(12, 15);  // center -> sink block 3
  edges.emplace_back(13, 20);  // center -> sink block 4
  return DirectedGraph::from_edges(25, std::move(edges));
}

DirectedGraph generate_erdos_renyi(NodeId n, double p, std::uint64_t seed) {
  if (p < 0.0 || p > 1.0) throw validation_error("edge probability must be in [0, 1]");
  Rng rng(seed);
  std::vector<std::pair<NodeId, NodeId>> edges;
  for (NodeId u = 0; u < n; ++u) {
    for (NodeId v = 0; v < n; ++v) {
      if (u == v) continue;
      if (rng.uniform() < p) edges.emplace_back(u, v);
    }
  }
  return DirectedGraph::from_edges(n, std::move(edges));
}

GraphStats graph_stats(const DirectedGraph& g, const DistanceMatrix& d) {
  if (d.num_nodes() != g.num_nodes())
    throw validation_error("distance matrix does not match graph size");
  GraphStats s;
  s.n_nodes = g.num_nodes();
  s.n_edges = g.num_edges();

  const std::size_t n = g.num_nodes();
  std::size_t inf_count = 0;
  for (std::size_t i = 0; i < n * n; ++i)
    if (d.entries()[i] == DistanceMatrix::kInfinity) ++inf_count;
  s.infinite_ratio = n == 0 ? 0.0 : static_cast<double>(inf_count) / static_cast<double>(n * n);

  std::size_t reciprocated = 0;
  for (NodeId u = 0; u < g.num_nodes(); ++u)
    for (NodeId v : g.out_neighbors(u))
      if (g.has_edge(v, u)) ++reciprocated;
  s.reciprocity =
      g.num_edges() == 0 ? 0.0 : static_cast<double>(reciprocated) / static_cast<double>(g.num_edges());
  return s;
}

}  // namespace sme
