#include "sme/scc.hpp"

#include <algorithm>

namespace sme {

// Iterative Tarjan so deep graphs cannot blow the call stack. Components pop
// in reverse topological order of the condensation: when a root closes, every
// component reachable from it is already emitted.
SCCDecomposition tarjan_scc(const DirectedGraph& g) {
  const NodeId n = g.num_nodes();
  constexpr std::uint32_t kUnvisited = 0xFFFFFFFFu;

  std::vector<std::uint32_t> index(n, kUnvisited);
  std::vector<std::uint32_t> lowlink(n, 0);
  std::vector<bool> on_stack(n, false);
  std::vector<NodeId> stack;
  std::vector<std::uint32_t> component_of(n, kUnvisited);
  std::uint32_t next_index = 0;
  std::uint32_t next_component = 0;

  struct Frame {
    NodeId node;
    std::size_t next_child;
  };
  std::vector<Frame> call;

  for (NodeId start = 0; start < n; ++start) {
    if (index[start] != kUnvisited) continue;
    call.push_back({start, 0});
    index[start] = lowlink[start] = next_index++;
    stack.push_back(start);
    on_stack[start] = true;

    while (!call.empty()) {
      Frame& f = call.back();
      const NodeId u = f.node;
      const auto& succ = g.out_neighbors(u);
      if (f.next_child < succ.size()) {
        const NodeId v = succ[f.next_child++];
        if (index[v] == kUnvisited) {
          index[v] = lowlink[v] = next_index++;
          stack.push_back(v);
          on_stack[v] = true;
          call.push_back({v, 0});
        } else if (on_stack[v]) {
          lowlink[u] = std::min(lowlink[u], index[v]);
        }
      } else {
        call.pop_back();
        if (!call.empty()) {
          const NodeId parent = call.back().node;
          lowlink[parent] = std::min(lowlink[parent], lowlink[u]);
        }
        if (lowlink[u] == index[u]) {
          for (;;) {
            const NodeId w = stack.back();
            stack.pop_back();
            on_stack[w] = false;
            component_of[w] = next_component;
            if (w == u) break;
          }
          ++next_component;
        }
      }
    }
  }

  SCCDecomposition scc;
  scc.component_of = std::move(component_of);
  const std::uint32_t c = next_component;
  scc.topo_order.resize(c);
  scc.topo_index_of.resize(c);
  // Emission order is reverse topological, so component id (c-1) comes first.
  for (std::uint32_t id = 0; id < c; ++id) {
    const std::uint32_t pos = c - 1 - id;
    scc.topo_order[pos] = id;
    scc.topo_index_of[id] = pos;
  }
  scc.component_members.assign(c, {});
  for (NodeId u = 0; u < n; ++u) scc.component_members[scc.component_of[u]].push_back(u);
  return scc;
}

}  // namespace sme
