#include "sme/sampling.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include "sme/errors.hpp"
#include "sme/rng.hpp"

namespace sme {

namespace {

// One BFS frontier layer at a time, neighbors deduplicated and ascending.
class LayeredBfs {
 public:
  LayeredBfs(const DirectedGraph& g, NodeId source, bool follow_out)
      : g_(g), follow_out_(follow_out), seen_(g.num_nodes(), false) {
    seen_[source] = true;
    frontier_.push_back(source);
  }

  // Returns the next layer (distance = calls so far + 1); empty when done.
  std::vector<NodeId> next_layer() {
    std::vector<NodeId> next;
    for (NodeId u : frontier_) {
      const auto& nbrs = follow_out_ ? g_.out_neighbors(u) : g_.in_neighbors(u);
      for (NodeId v : nbrs) {
        if (!seen_[v]) {
          seen_[v] = true;
          next.push_back(v);
        }
      }
    }
    std::sort(next.begin(), next.end());
    frontier_ = next;
    return next;
  }

 private:
  const DirectedGraph& g_;
  bool follow_out_;
  std::vector<bool> seen_;
  std::vector<NodeId> frontier_;
};

}  // namespace

std::vector<TrainingPair> sample_close_pairs(const DirectedGraph& g, std::uint32_t B) {
  if (B < 1) throw validation_error("close-pair budget B must be >= 1");
  std::vector<TrainingPair> out;
  out.reserve(static_cast<std::size_t>(g.num_nodes()) * B);

  for (NodeId u = 0; u < g.num_nodes(); ++u) {
    LayeredBfs fwd(g, u, true);
    LayeredBfs bwd(g, u, false);
    std::uint32_t taken = 0;
    std::uint32_t depth = 0;
    bool fwd_done = false, bwd_done = false;
    while (taken < B && !(fwd_done && bwd_done)) {
      ++depth;
      if (!fwd_done) {
        auto layer = fwd.next_layer();
        if (layer.empty()) {
          fwd_done = true;
        } else {
          for (NodeId v : layer) {
            if (taken >= B) break;
            out.push_back({u, v, depth});
            ++taken;
          }
        }
      }
      if (taken >= B) break;
      if (!bwd_done) {
        auto layer = bwd.next_layer();
        if (layer.empty()) {
          bwd_done = true;
        } else {
          for (NodeId v : layer) {
            if (taken >= B) break;
            out.push_back({v, u, depth});
            ++taken;
          }
        }
      }
    }
  }

  // U_close is a set: the same ordered pair can arrive from u's forward pass
  // and v's backward pass.
  std::sort(out.begin(), out.end(), [](const TrainingPair& a, const TrainingPair& b) {
    return std::tie(a.u, a.v) < std::tie(b.u, b.v);
  });
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<TrainingPair> sample_infinite_pairs(const DirectedGraph& g,
                                                const SCCDecomposition& scc, std::uint32_t B,
                                                std::uint64_t seed) {
  if (B < 1) throw validation_error("infinite-pair budget B must be >= 1");
  const NodeId n = g.num_nodes();

  // Nodes concatenated in topological component order; prefix[i] is where
  // topo component i starts, so the candidates for a node in topo component
  // t are exactly positions [0, prefix[t]).
  std::vector<NodeId> topo_nodes;
  topo_nodes.reserve(n);
  std::vector<std::size_t> prefix(scc.num_components() + 1, 0);
  for (std::uint32_t t = 0; t < scc.num_components(); ++t) {
    prefix[t] = topo_nodes.size();
    for (NodeId v : scc.component_members[scc.topo_order[t]]) topo_nodes.push_back(v);
  }
  prefix[scc.num_components()] = topo_nodes.size();

  Rng base(seed);
  std::vector<TrainingPair> out;
  for (NodeId u = 0; u < n; ++u) {
    const std::uint32_t t = scc.topo_index_of[scc.component_of[u]];
    const std::size_t candidates = prefix[t];
    if (candidates == 0) continue;

    std::vector<std::size_t> picks;
    if (candidates <= B) {
      picks.resize(candidates);
      for (std::size_t i = 0; i < candidates; ++i) picks[i] = i;
    } else {
      // Floyd's algorithm: B uniform draws without replacement.
      Rng rng = base.fork(u);
      std::unordered_set<std::size_t> chosen;
      for (std::size_t j = candidates - B; j < candidates; ++j) {
        std::size_t t_pick = rng.uniform_int(j + 1);
        if (!chosen.insert(t_pick).second) chosen.insert(j);
      }
      picks.assign(chosen.begin(), chosen.end());
      std::sort(picks.begin(), picks.end());
    }
    for (std::size_t p : picks) out.push_back({u, topo_nodes[p], DistanceMatrix::kInfinity});
  }
  return out;
}

std::vector<TrainingPair> TrainingSet::all_pairs() const {
  std::vector<TrainingPair> pairs;
  if (mode == SampleMode::kFull) {
    const NodeId n = matrix.num_nodes();
    pairs.reserve(static_cast<std::size_t>(n) * (n - 1));
    for (NodeId u = 0; u < n; ++u)
      for (NodeId v = 0; v < n; ++v)
        if (u != v) pairs.push_back({u, v, matrix.at(u, v)});
  } else {
    pairs.reserve(sets.close_pairs.size() + sets.inf_pairs.size());
    pairs.insert(pairs.end(), sets.close_pairs.begin(), sets.close_pairs.end());
    pairs.insert(pairs.end(), sets.inf_pairs.begin(), sets.inf_pairs.end());
  }
  return pairs;
}

std::size_t TrainingSet::num_terms() const {
  if (mode == SampleMode::kFull) {
    const std::size_t n = matrix.num_nodes();
    return n * (n - 1);
  }
  return sets.close_pairs.size() + sets.inf_pairs.size();
}

TrainingSet build_training_set(const DirectedGraph& g, SampleMode mode, std::uint32_t B,
                               std::uint64_t seed, NodeId apsp_limit, unsigned threads) {
  TrainingSet ts;
  ts.mode = mode;
  if (mode == SampleMode::kFull) {
    ts.matrix = all_pairs_shortest_paths(g, apsp_limit, threads);
  } else {
    if (B < 1) throw validation_error("sampled mode requires B >= 1");
    ts.sets.budget = B;
    ts.sets.close_pairs = sample_close_pairs(g, B);
    ts.sets.inf_pairs = sample_infinite_pairs(g, tarjan_scc(g), B, seed);
  }
  return ts;
}

void save_pairs_csv(const SampleSets& sets, SampleMode mode, std::uint64_t seed,
                    const std::string& path) {
  std::ofstream out(path);
  if (!out) throw validation_error("cannot write pairs CSV: " + path);
  out << "# mode=" << (mode == SampleMode::kFull ? "full" : "sampled") << " B=" << sets.budget
      << " seed=" << seed << '\n';
  out << "u,v,distance\n";
  auto dump = [&](const std::vector<TrainingPair>& pairs) {
    for (const auto& p : pairs) {
      out << p.u << ',' << p.v << ',';
      if (p.distance == DistanceMatrix::kInfinity) {
        out << "inf";
      } else {
        out << p.distance;
      }
      out << '\n';
    }
  };
  dump(sets.close_pairs);
  dump(sets.inf_pairs);
}

SampleSets load_pairs_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw validation_error("cannot open pairs CSV: " + path);
  SampleSets sets;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (line[0] == '#') {
      auto bpos = line.find("B=");
      if (bpos != std::string::npos) sets.budget = static_cast<std::uint32_t>(std::stoul(line.substr(bpos + 2)));
      continue;
    }
    if (line.rfind("u,v,", 0) == 0) continue;  // column header
    std::istringstream ls(line);
    std::string tu, tv, td;
    if (!std::getline(ls, tu, ',') || !std::getline(ls, tv, ',') || !std::getline(ls, td)) {
      throw validation_error("pairs CSV line " + std::to_string(line_no) + ": expected u,v,distance");
    }
    TrainingPair p{};
    auto parse_u32 = [&](const std::string& tok) {
      std::uint32_t v = 0;
      auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
      if (ec != std::errc{} || ptr != tok.data() + tok.size())
        throw validation_error("pairs CSV line " + std::to_string(line_no) + ": bad token '" + tok + "'");
      return v;
    };
    p.u = parse_u32(tu);
    p.v = parse_u32(tv);
    if (td == "inf") {
      p.distance = DistanceMatrix::kInfinity;
      sets.inf_pairs.push_back(p);
    } else {
      p.distance = parse_u32(td);
      sets.close_pairs.push_back(p);
    }
  }
  return sets;
}

}  // namespace sme
